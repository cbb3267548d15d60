# Pacote controllers: geometria, Newton, certificado e execuções
