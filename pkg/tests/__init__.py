# Pacote tests (unittest)
