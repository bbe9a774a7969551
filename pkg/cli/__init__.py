# FitGrowth command-line interface
