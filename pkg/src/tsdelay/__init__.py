"""Delay dynamic equations on time scales: calculus, simulation and stability certificates."""
