# This file makes this a Python package
