"""Quasi-probability decomposition of a virtual RZZ interaction.

The decomposed object is the conjugation channel of U(theta) = exp(+i theta/2
Z(x)Z).  Our circuit-level RZZ(a) equals exp(-i a Z(x)Z / 2), so a gate of
angle a is cut at decomposition angle theta = -a; `decomposition_angle` is the
single place where that sign boundary is crossed.

The identity splits the channel into ten local terms:

    cos^2(t/2) II  +  sin^2(t/2) ZZ
      + (1/8) cos(t/2) sin(t/2) * sum over signs a0, a1 of a0*a1 *
            [ (I+a0 Z)(x)(I+i a1 Z)  +  (I+i a0 Z)(x)(I+a1 Z) ]

each applied as A rho A^dag.  The projector side is realizable as a Z-basis
measurement, the rotation side as Rz(-a pi/2) (times sqrt(2)).  Collapsing
each sign quadruple into a signed measurement instrument leaves six executable
fragments per cut, with quasi-probability 1-norm gamma = 1 + 2|sin(theta)|.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

from .circuit import Circuit, Gate, GateKind, circuit_to_text, measure_z, reset, rz, x
from .errors import PreconditionError
from .sim import (
    DensityMatrix,
    FragmentOp,
    FragmentOpKind,
    PauliObservable,
    apply_fragment_operator,
    apply_gates_density,
    expectation,
    identity_op,
    pauli_z_op,
    proj_plus,
    rot_i_plus_iz,
)

FAMILY_II = "II"
FAMILY_ZZ = "ZZ"
FAMILY_PROJ_ROT = "PROJ_ROT"
FAMILY_ROT_PROJ = "ROT_PROJ"

# Trace blow-up of one cross term's operators: (I+aZ) squares to 4x a projector,
# (I+iaZ) to 2x a rotation.
CROSS_TERM_SCALE = 8.0


def decomposition_angle(gate_angle: float) -> float:
    """Map a circuit RZZ gate angle onto the decomposed conjugation angle."""
    return -gate_angle


@dataclass(frozen=True)
class QpdTerm:
    """One of the ten decomposition terms: a coefficient and two local operators."""

    coefficient: float
    family: str
    op_a: FragmentOp
    op_b: FragmentOp
    alpha_a: int | None = None
    alpha_b: int | None = None


def decompose_vrzz(theta: float) -> list[QpdTerm]:
    """The ten-term decomposition of conjugation by exp(+i theta/2 Z(x)Z).

    Term order is fixed (II, ZZ, then the eight cross terms by sign pair) so
    weighted reductions are bit-stable.
    """
    if not math.isfinite(theta):
        raise ValueError(f"angle must be finite, got {theta}")
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    # 1 - c*c rather than s*s keeps the two diagonal coefficients summing to
    # 1.0 exactly in floating point (difference from s*s is at most one ulp)
    terms = [
        QpdTerm(c * c, FAMILY_II, identity_op(), identity_op()),
        QpdTerm(1.0 - c * c, FAMILY_ZZ, pauli_z_op(), pauli_z_op()),
    ]
    for aa, ab in itertools.product((1, -1), repeat=2):
        k = 0.125 * c * s * aa * ab
        terms.append(QpdTerm(k, FAMILY_PROJ_ROT, proj_plus(aa), rot_i_plus_iz(ab), aa, ab))
        terms.append(QpdTerm(k, FAMILY_ROT_PROJ, rot_i_plus_iz(aa), proj_plus(ab), aa, ab))
    return terms


def reconstruct_channel(terms: list[QpdTerm], rho: DensityMatrix) -> DensityMatrix:
    """Weighted sum of all terms applied to a two-qubit state."""
    if rho.n_qubits != 2:
        raise ValueError(f"reconstruction is defined on 2-qubit states, got {rho.n_qubits}")
    total = None
    for t in terms:
        frag = apply_fragment_operator(rho, 0, t.op_a)
        frag = apply_fragment_operator(frag, 1, t.op_b)
        contrib = t.coefficient * frag.mat
        total = contrib if total is None else total + contrib
    return DensityMatrix(2, total)


def gamma(theta: float, *, self_check: bool = False) -> float:
    """Sampling overhead: 1-norm of the grouped quasi-probability weights.

    With self_check=True the closed form 1 + 2|sin theta| is re-derived from
    the grouped instrument weights and both paths must agree to 1e-12.
    """
    if not math.isfinite(theta):
        raise ValueError(f"angle must be finite, got {theta}")
    value = 1.0 + 2.0 * abs(math.sin(theta))
    if self_check:
        summed = sum(abs(g.weight) for g in group_for_sampling(decompose_vrzz(theta)))
        if abs(summed - value) > 1e-12:
            raise AssertionError(f"gamma self-check failed: {summed} vs {value}")
    return value


KIND_MEAS_ROT = "MEAS_ROT"  # signed Z measurement on qubit a, Rz on qubit b
KIND_ROT_MEAS = "ROT_MEAS"  # Rz on qubit a, signed Z measurement on qubit b


@dataclass(frozen=True)
class GroupedInstrument:
    """One of six executable fragments per cut.

    The measurement side is a signed Z instrument: its outcome multiplies the
    shot's quasi-probability sign.  The rotation side is Rz(rz_angle).
    """

    weight: float
    kind: str
    rz_angle: float | None = None

    def insertion_gates(self, qubit_a: int, qubit_b: int, clbit: int) -> list[Gate]:
        if self.kind == FAMILY_II:
            return []
        if self.kind == FAMILY_ZZ:
            # RZ(pi) conjugates like Pauli Z (phases cancel in A rho A^dag)
            return [rz(math.pi, qubit_a), rz(math.pi, qubit_b)]
        if self.kind == KIND_MEAS_ROT:
            return [measure_z(qubit_a, clbit, signed=True), rz(self.rz_angle, qubit_b)]
        return [rz(self.rz_angle, qubit_a), measure_z(qubit_b, clbit, signed=True)]


def _validate_terms(terms: list[QpdTerm]) -> tuple[float, float, float]:
    """Check a term list came from decompose_vrzz; return (cos^2, sin^2, cos*sin) of theta/2."""
    if len(terms) != 10 or terms[0].family != FAMILY_II or terms[1].family != FAMILY_ZZ:
        raise ValueError("term list does not match the ten-term decomposition layout")
    cc, ss = terms[0].coefficient, terms[1].coefficient
    if cc < -1e-12 or ss < -1e-12 or abs(cc + ss - 1.0) > 1e-9:
        raise ValueError("diagonal coefficients are not cos^2/sin^2 summing to 1")
    cs = terms[2].coefficient * 8.0  # alpha pair (+1, +1)
    if abs(abs(cs) - math.sqrt(max(cc, 0.0) * max(ss, 0.0))) > 1e-9:
        raise ValueError("cross coefficients are inconsistent with the diagonal ones")
    expected_families = [FAMILY_PROJ_ROT, FAMILY_ROT_PROJ] * 4
    for t, fam, (aa, ab) in zip(terms[2:], expected_families,
                                [p for p in itertools.product((1, -1), repeat=2) for _ in (0, 1)]):
        if t.family != fam or t.alpha_a != aa or t.alpha_b != ab:
            raise ValueError("cross terms out of canonical order")
        if abs(t.coefficient - 0.125 * cs * aa * ab) > 1e-9:
            raise ValueError("cross coefficient does not match its sign pair")
    return cc, ss, cs


def group_for_sampling(terms: list[QpdTerm]) -> list[GroupedInstrument]:
    """Collapse each sign quadruple into signed instruments: six fragments per cut.

    The four PROJ_ROT terms become two instruments (measure qubit a, rotate
    qubit b by -pi/2 or +pi/2 with weights +-cos(t/2)sin(t/2)); likewise the
    ROT_PROJ terms with the roles swapped.  Absolute weights sum to gamma.
    """
    cc, ss, cs = _validate_terms(terms)
    half = math.pi / 2
    return [
        GroupedInstrument(cc, FAMILY_II),
        GroupedInstrument(ss, FAMILY_ZZ),
        GroupedInstrument(+cs, KIND_MEAS_ROT, rz_angle=-half),
        GroupedInstrument(-cs, KIND_MEAS_ROT, rz_angle=+half),
        GroupedInstrument(+cs, KIND_ROT_MEAS, rz_angle=-half),
        GroupedInstrument(-cs, KIND_ROT_MEAS, rz_angle=+half),
    ]


def reconstruct_expectation(per_term_values: list[tuple[float, float]]) -> float:
    """Sum coefficient * raw value over fragments; no normalization."""
    if not per_term_values:
        raise ValueError("nothing to reconstruct")
    return float(sum(c * v for c, v in per_term_values))


# --- projected-fragment simplification ---------------------------------------


@dataclass(frozen=True)
class SimplifiedTerm:
    """Projected cross term on a known product state, absorbed classically.

    When the projected qubit enters the cut in RX(2 beta)|0>, the projector
    collapses it to a basis state with probability cos^2(beta) (alpha=+1) or
    sin^2(beta) (alpha=-1).  That probability is taken out of the circuit as
    `classical_factor`; the surviving fragment is a CPTP circuit: re-prepare
    the projected qubit in its basis state and rotate the partner by
    `partner_rz`.  Any later RZZ on the projected wire folds onto its other
    qubit as RZ(+angle) when the projected qubit is |0>, RZ(-angle) when |1>.
    Raw fragment value = scale * classical_factor * (CPTP circuit value).
    """

    classical_factor: float
    projected_side: str  # "a" or "b"
    projected_bit: int
    partner_rz: float
    fold_sign: float
    scale: float = CROSS_TERM_SCALE


def simplify_projected(term: QpdTerm, beta: float, *, product_form_asserted: bool = False) -> SimplifiedTerm:
    """Absorb a cross term's projector into a classical probability.

    Only valid when the projected qubit's state just before the cut is the
    single-qubit product RX(2 beta)|0>; the caller must assert that, we have
    no way to check it from here.
    """
    if term.family not in (FAMILY_PROJ_ROT, FAMILY_ROT_PROJ):
        raise ValueError(f"only projective cross terms simplify, got {term.family}")
    if not product_form_asserted:
        raise PreconditionError(
            "simplify_projected requires the caller to assert the projected qubit "
            "is in the product state RX(2*beta)|0> at the cut"
        )
    if not math.isfinite(beta):
        raise ValueError(f"beta must be finite, got {beta}")
    if term.family == FAMILY_PROJ_ROT:
        side, alpha_proj, alpha_rot = "a", term.alpha_a, term.alpha_b
    else:
        side, alpha_proj, alpha_rot = "b", term.alpha_b, term.alpha_a
    factor = math.cos(beta) ** 2 if alpha_proj == 1 else math.sin(beta) ** 2
    bit = 0 if alpha_proj == 1 else 1
    return SimplifiedTerm(
        classical_factor=factor,
        projected_side=side,
        projected_bit=bit,
        partner_rz=-alpha_rot * math.pi / 2,
        fold_sign=1.0 if bit == 0 else -1.0,
    )


# --- cut sites and fragment programs ------------------------------------------


@dataclass(frozen=True)
class CutSite:
    """A virtual RZZ location: decomposition operators act on (qubit_a, qubit_b)
    just before gate index `position`; `theta` is the decomposition angle (the
    RZZ gate being virtualized had angle -theta)."""

    position: int
    qubit_a: int
    qubit_b: int
    theta: float


def _check_cuts(circuit: Circuit, cuts) -> list[CutSite]:
    cuts = sorted(cuts, key=lambda c: c.position)
    seen_pos = set()
    for c in cuts:
        if not 0 <= c.position <= len(circuit.gates):
            raise ValueError(f"cut position {c.position} out of range")
        if c.position in seen_pos:
            raise ValueError("one cut per circuit position")
        seen_pos.add(c.position)
        if c.qubit_a == c.qubit_b or not all(0 <= q < circuit.n_qubits for q in (c.qubit_a, c.qubit_b)):
            raise ValueError(f"bad cut qubits ({c.qubit_a}, {c.qubit_b})")
    return cuts


def run_enumerated_exact(circuit: Circuit, cuts, observables: list[PauliObservable],
                         noise=None) -> tuple[list[float], int]:
    """Evaluate observables by enumerating every term combination exactly.

    Each of the 10^m fragments runs through the density-matrix simulator with
    its local operators applied in place of the virtual gates; results are the
    coefficient-weighted sums, reduced in a fixed depth-first order.  Shared
    circuit prefixes are evolved once.
    """
    cuts = _check_cuts(circuit, cuts)
    m = len(cuts)
    term_lists = [decompose_vrzz(c.theta) for c in cuts]
    positions = [c.position for c in cuts] + [len(circuit.gates)]
    segments = [circuit.gates[0 if i == 0 else positions[i - 1]: positions[i]] for i in range(m + 1)]
    values = [0.0] * len(observables)
    count = 0

    def descend(rho: DensityMatrix, depth: int, coeff: float):
        nonlocal count
        rho = apply_gates_density(rho, segments[depth], noise)
        if depth == m:
            for j, obs in enumerate(observables):
                values[j] += coeff * expectation(rho, obs)
            count += 1
            return
        cut = cuts[depth]
        for term in term_lists[depth]:
            frag = apply_fragment_operator(rho, cut.qubit_a, term.op_a)
            frag = apply_fragment_operator(frag, cut.qubit_b, term.op_b)
            descend(frag, depth + 1, coeff * term.coefficient)

    descend(DensityMatrix.zero(circuit.n_qubits), 0, 1.0)
    return values, count


@dataclass(frozen=True)
class SampledFragment:
    """One executable sampling fragment.

    `weight` multiplies the (sign-accumulated) shot average.  `keep_rules`
    lists (clbit, required value) pairs: shots whose mid-circuit outcomes
    disagree contribute zero (that realizes a one-sided projector).
    """

    weight: float
    circuit: Circuit
    keep_rules: tuple[tuple[int, int], ...] = ()
    labels: tuple[str, ...] = ()


def _insert_for_cuts(circuit: Circuit, cuts: list[CutSite], per_cut_gates: list[list[Gate]],
                     n_clbits: int) -> Circuit:
    out = circuit
    for cut, gates in sorted(zip(cuts, per_cut_gates), key=lambda t: -t[0].position):
        out = out.with_inserted(cut.position, gates, n_clbits=n_clbits)
    return out


def build_grouped_fragments(circuit: Circuit, cuts) -> list[SampledFragment]:
    """All 6^m signed-instrument circuits for a cut circuit (classical bit k serves cut k)."""
    cuts = _check_cuts(circuit, cuts)
    n_clbits = max(circuit.n_clbits, len(cuts))
    groups = [group_for_sampling(decompose_vrzz(c.theta)) for c in cuts]
    fragments = []
    for combo in itertools.product(*groups):
        weight = 1.0
        per_cut = []
        labels = []
        for k, (cut, inst) in enumerate(zip(cuts, combo)):
            weight *= inst.weight
            per_cut.append(inst.insertion_gates(cut.qubit_a, cut.qubit_b, k))
            labels.append(inst.kind if inst.rz_angle is None else f"{inst.kind}({inst.rz_angle:+.6f})")
        fragments.append(SampledFragment(weight, _insert_for_cuts(circuit, cuts, per_cut, n_clbits),
                                         labels=tuple(labels)))
    return fragments


def build_enumerated_fragments(circuit: Circuit, cuts) -> list[SampledFragment]:
    """All 10^m per-term sampling circuits.

    Projector sides become plain mid-circuit measurements plus a keep rule;
    rotation and Pauli sides become RZ gates.  Each cross term carries the
    operator-norm scale 8 folded into its weight.
    """
    cuts = _check_cuts(circuit, cuts)
    n_clbits = max(circuit.n_clbits, len(cuts))
    term_lists = [decompose_vrzz(c.theta) for c in cuts]
    fragments = []
    for combo in itertools.product(*term_lists):
        weight = 1.0
        per_cut = []
        keeps = []
        labels = []
        for k, (cut, term) in enumerate(zip(cuts, combo)):
            gates, scale = [], 1.0
            for qubit, op in ((cut.qubit_a, term.op_a), (cut.qubit_b, term.op_b)):
                if op.kind == FragmentOpKind.IDENTITY:
                    continue
                if op.kind == FragmentOpKind.PAULI_Z:
                    gates.append(rz(math.pi, qubit))
                elif op.kind == FragmentOpKind.ROT_I_PLUS_IZ:
                    gates.append(rz(-op.alpha * math.pi / 2, qubit))
                    scale *= 2.0
                else:
                    gates.append(measure_z(qubit, k))
                    keeps.append((k, 0 if op.alpha == 1 else 1))
                    scale *= 4.0
            weight *= term.coefficient * scale
            per_cut.append(gates)
            labels.append(f"{term.family}[{op_pair_label(term)}]")
        fragments.append(SampledFragment(weight, _insert_for_cuts(circuit, cuts, per_cut, n_clbits),
                                         keep_rules=tuple(keeps), labels=tuple(labels)))
    return fragments


def op_pair_label(term: QpdTerm) -> str:
    return f"{term.op_a.label()},{term.op_b.label()}"


def fragment_manifest(circuit: Circuit, cuts, mode: str = "enumerated") -> dict:
    """JSON-ready description of every fragment circuit for external runners."""
    cuts = _check_cuts(circuit, cuts)
    if mode == "enumerated":
        fragments = build_enumerated_fragments(circuit, cuts)
        term_lists = [decompose_vrzz(c.theta) for c in cuts]
        combos = list(itertools.product(*term_lists))
        entries = []
        for i, (frag, combo) in enumerate(zip(fragments, combos)):
            entries.append({
                "index": i,
                "families": [t.family for t in combo],
                "alphas": [[t.alpha_a, t.alpha_b] for t in combo],
                "coefficient": math.prod(t.coefficient for t in combo),
                "weight": frag.weight,
                "keep_rules": [list(r) for r in frag.keep_rules],
                "circuit": circuit_to_text(frag.circuit),
            })
    elif mode == "grouped":
        fragments = build_grouped_fragments(circuit, cuts)
        entries = [{
            "index": i,
            "families": list(frag.labels),
            "weight": frag.weight,
            "circuit": circuit_to_text(frag.circuit),
        } for i, frag in enumerate(fragments)]
    else:
        raise ValueError(f"unknown manifest mode {mode!r}")
    return {
        "mode": mode,
        "n_qubits": circuit.n_qubits,
        "cuts": [{"position": c.position, "qubit_a": c.qubit_a, "qubit_b": c.qubit_b,
                  "theta": c.theta} for c in cuts],
        "fragment_count": len(entries),
        "fragments": entries,
    }


def write_fragment_manifest(path, circuit: Circuit, cuts, mode: str = "enumerated") -> None:
    with open(path, "w") as fh:
        json.dump(fragment_manifest(circuit, cuts, mode), fh, indent=2)


# --- exact evaluation of single terms (full vs simplified) ---------------------


def evaluate_term_exact(circuit: Circuit, cut: CutSite, term: QpdTerm,
                        observables: list[PauliObservable], noise=None) -> list[float]:
    """Raw (pre-coefficient) values of one term's fragment, exactly."""
    cuts = _check_cuts(circuit, [cut])
    cut = cuts[0]
    rho = apply_gates_density(DensityMatrix.zero(circuit.n_qubits), circuit.gates[: cut.position], noise)
    rho = apply_fragment_operator(rho, cut.qubit_a, term.op_a)
    rho = apply_fragment_operator(rho, cut.qubit_b, term.op_b)
    rho = apply_gates_density(rho, circuit.gates[cut.position:], noise)
    return [expectation(rho, obs) for obs in observables]


def realize_simplified(circuit: Circuit, cut: CutSite, simplified: SimplifiedTerm) -> Circuit:
    """CPTP circuit of a simplified projected fragment.

    The projected wire is re-prepared in its basis state at the cut (reset,
    plus X for |1>), the partner wire gets the surviving Rz, and every later
    RZZ touching the projected wire is folded onto its other qubit as
    RZ(fold_sign * angle).
    """
    proj_q = cut.qubit_a if simplified.projected_side == "a" else cut.qubit_b
    partner_q = cut.qubit_b if simplified.projected_side == "a" else cut.qubit_a
    inserted = [reset(proj_q)]
    if simplified.projected_bit == 1:
        inserted.append(x(proj_q))
    inserted.append(rz(simplified.partner_rz, partner_q))
    gates = list(circuit.gates[: cut.position]) + inserted
    for g in circuit.gates[cut.position:]:
        if proj_q in g.qubits:
            if g.kind == GateKind.RZZ:
                other = g.qubits[0] if g.qubits[1] == proj_q else g.qubits[1]
                gates.append(rz(simplified.fold_sign * g.angle, other))
                continue
            if g.kind != GateKind.RZ:
                raise ValueError(
                    f"cannot fold {g.kind.value} on the projected wire; only diagonal gates survive"
                )
            continue  # phase on a basis state: drop
        gates.append(g)
    return Circuit(circuit.n_qubits, circuit.n_clbits, tuple(gates))


def evaluate_simplified_exact(circuit: Circuit, cut: CutSite, simplified: SimplifiedTerm,
                              observables: list[PauliObservable], noise=None) -> list[float]:
    """Raw values of a simplified fragment: scale * classical factor * CPTP run."""
    realized = realize_simplified(circuit, cut, simplified)
    rho = apply_gates_density(DensityMatrix.zero(realized.n_qubits), realized.gates, noise)
    k = simplified.scale * simplified.classical_factor
    return [k * expectation(rho, obs) for obs in observables]
