"""Explicit inversion of ray transforms over integral curves of planar vector fields"""

__author__ = 'Peter Demin'
__email__ = 'peterdemin@gmail.com'
__version__ = '0.3.0'
