# Marks the 'emshield' directory as a package.
# Modules inside import each other by bare name; emshield_cli.py and tests/conftest.py
# put this directory on sys.path.
