"""
Multitwist Mapping Torus Analyzer
Curvatura no positiva y cubulación especial de toros de aplicación multitwist
"""
