"""Binary-PSO majority-class instance selection for imbalanced classification."""
