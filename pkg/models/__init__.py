# Pacote models: algebra de Fourier, sistemas, estados do Newton e constantes
