"""
Walk through the Grassmann passage from the Marinov generator to the
classical Liouville generator for a quartic oscillator.

    python3 demos/dequantise_by_hand.py
"""

from dequant.grassmann import berezin_integrate
from dequant.moyal import classical_extended_hamiltonian, dequantise, marinov_hamiltonian, moyal_bracket, poisson_bracket
from dequant.parser import parse_poly

H = parse_poly("1/2*p^2 + 1/4*q^4", 1)
print("H                  =", H)

# the Marinov generator still knows about hbar through the q^4 term
print("Marinov generator  =", marinov_hamiltonian(H))
print("classical target   =", classical_extended_hamiltonian(H))

rep = dequantise(H)
print("\nafter theta*thetabar is attached to the symplectic form:")
print("  ", rep.shifted)
print("theta*thetabar part is hbar-free:", rep.hbar_free_before_integration)
print("Berezin integral   =", berezin_integrate(rep.shifted))
print("verdict            =", rep.verdict)

# the brackets tell the same story from the evolution side
rho = parse_poly("p^3", 1)
print("\n{H, p^3}_mb        =", moyal_bracket(H, rho))
print("{H, p^3}_pb        =", poisson_bracket(H, rho))
