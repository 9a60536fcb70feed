from entm.cli import main
from entm.logging_config import setup_logging

if __name__ == "__main__":
    setup_logging()
    main()
