"""Allow `python -m clinspan_bridge ...` as a tagger command line."""
from .cli import main

if __name__ == "__main__":
    main()
