from .app import main_app

if __name__ == "__main__":
    main_app()
