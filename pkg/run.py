from pathcg import create_cli

# Optional: select the configuration with PATHCG_CONFIG (dev, test or prod)
cli = create_cli()  # Call the factory to create the command group

if __name__ == '__main__':
    cli()
