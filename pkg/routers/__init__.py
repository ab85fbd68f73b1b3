# Command handlers invoked by main.py.
