"""Supermolecular binding energies and energy-unit conversions.

The binding energy of a complex AB is E(AB) - E(A) - E(B), every term taken
from the same kind of calculation.  Values are reported in Hartree alongside
kcal/mol and eV conversions.
"""

from dataclasses import dataclass

from .driver import SubspaceResult

HARTREE_TO_KCAL_PER_MOL = 627.509474
HARTREE_TO_EV = 27.211386


def hartree_to_kcal_mol(energy: float) -> float:
    return energy * HARTREE_TO_KCAL_PER_MOL


def hartree_to_ev(energy: float) -> float:
    return energy * HARTREE_TO_EV


def kcal_mol_to_ev(energy: float) -> float:
    return energy * HARTREE_TO_EV / HARTREE_TO_KCAL_PER_MOL


@dataclass
class BindingEnergyReport:
    """Component energies and the binding energy in three units."""

    method: str
    complex_energy: float
    fragment_a_energy: float
    fragment_b_energy: float
    binding_hartree: float
    binding_kcal_mol: float
    binding_ev: float
    dimensions: tuple[int, int, int]
    converged: tuple[bool, bool, bool]

    @property
    def all_converged(self) -> bool:
        return all(self.converged)


def binding_energy(complex_result: SubspaceResult, fragment_a: SubspaceResult,
                   fragment_b: SubspaceResult,
                   method: str | None = None) -> BindingEnergyReport:
    """Assemble the binding-energy report from three component runs."""
    if method is None:
        method = complex_result.method
    binding = complex_result.energy - fragment_a.energy - fragment_b.energy
    return BindingEnergyReport(
        method=method,
        complex_energy=complex_result.energy,
        fragment_a_energy=fragment_a.energy,
        fragment_b_energy=fragment_b.energy,
        binding_hartree=binding,
        binding_kcal_mol=hartree_to_kcal_mol(binding),
        binding_ev=hartree_to_ev(binding),
        dimensions=(complex_result.dimension, fragment_a.dimension,
                    fragment_b.dimension),
        converged=(complex_result.converged, fragment_a.converged,
                   fragment_b.converged))


def format_binding_report(report: BindingEnergyReport) -> str:
    """Fixed-width table with kcal/mol and eV columns."""
    lines = [
        f"{'method':<10}{'E_complex/Ha':>16}{'E_A/Ha':>16}{'E_B/Ha':>16}"
        f"{'kcal/mol':>12}{'eV':>10}",
        f"{report.method:<10}{report.complex_energy:>16.8f}"
        f"{report.fragment_a_energy:>16.8f}{report.fragment_b_energy:>16.8f}"
        f"{report.binding_kcal_mol:>12.2f}{report.binding_ev:>10.3f}",
    ]
    if not report.all_converged:
        flags = ", ".join(name for name, ok in
                          zip(("complex", "fragment_a", "fragment_b"),
                              report.converged) if not ok)
        lines.append(f"warning: unconverged components: {flags}")
    return "\n".join(lines) + "\n"
