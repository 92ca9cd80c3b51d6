# THIS FILE WILL EVENTUALLY BE GENERATED BY SETUP.PY
short_version = '0.1'
version = '0.1.0'
full_version = '0.1.0.dev0'
release = False

if not release:
    version = full_version
