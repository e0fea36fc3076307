"""Master-equation simulation of dissipative OR/NOR gates on two trapped ions."""
__version__ = "0.1.0"
