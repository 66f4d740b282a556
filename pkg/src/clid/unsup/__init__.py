"""Label-free feature extractors: clustering ensemble, VAE and LDA."""
