# Numerical services: reconstruction, fluxes, time stepping, scenarios, output.
