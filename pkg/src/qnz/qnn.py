"""Binary-weight quantum neurons: sign-flip circuits, forward passes, synthetic data.

A weight vector w in {-1,+1}^(2^k) becomes a circuit whose unitary is diag(w)
up to global sign: one X-conjugated C^(k-1)Z block per flipped index, with
adjacent X wrappers merged. The neuron output is the probability of reading
|0...0> after amplitude-encoding the input, applying the weight circuit, and
a final H layer; in closed form that is ((w . x) / sqrt(N))^2.

State preparation is treated as a given initial state, so noise acts on the
weight and measurement portion only.
"""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from .ir import Circuit, Gate, GateKind
from .mapper import MappedCircuit, compile
from .noise import NoiseModel, bind
from .simulator import (
    derive_seed,
    run_mapped_density,
    run_mapped_ideal,
    run_mapped_trajectories,
)
from .topology import CouplingGraph, linear_chain

BACKENDS = ("ideal", "density", "trajectories")


def check_weights(w) -> tuple[int, ...]:
    w = tuple(int(v) for v in w)
    n = len(w)
    if n < 2 or n & (n - 1):
        raise ValueError(f"weight length {n} is not a power of two >= 2")
    if any(v not in (-1, 1) for v in w):
        raise ValueError("weights must be -1 or +1")
    return w


def weights_from_code(code: int, n: int) -> tuple[int, ...]:
    """Enumeration order used everywhere: bit i of `code` flips entry i."""
    return tuple(-1 if (code >> (n - 1 - i)) & 1 else 1 for i in range(n))


def code_from_weights(w) -> int:
    n = len(w)
    return sum(1 << (n - 1 - i) for i, v in enumerate(w) if v == -1)


def circ_of_weights(w) -> Circuit:
    """Sign-flip circuit realizing diag(w) up to global sign.

    If more than half the entries are -1 the whole vector is negated first,
    bounding the block count at N/2; the neuron output is invariant under
    that global sign. Each block flips one amplitude: X on the qubits where
    the index bit is 0, around one C^(k-1)Z on all k qubits. X wrappers of
    consecutive blocks are merged (adjacent X X cancels).
    """
    w = check_weights(w)
    n = len(w)
    k = n.bit_length() - 1
    flips = [i for i, v in enumerate(w) if v == -1]
    if len(flips) > n // 2:
        flips = [i for i, v in enumerate(w) if v == 1]
    num_aux = max(k - 2, 0)
    if not flips:
        return Circuit(k, num_aux, (), block_boundaries=())

    def wrapper(i: int) -> set[int]:
        return {q for q in range(k) if not (i >> (k - 1 - q)) & 1}

    gates: list[Gate] = []
    boundaries: list[tuple[int, int]] = []
    start = 0
    prev: set[int] = set()
    for j, i in enumerate(flips):
        for q in sorted(wrapper(i) ^ prev):
            gates.append(Gate(GateKind.X, (q,)))
        if k == 1:
            gates.append(Gate(GateKind.Z, (0,)))
        else:
            gates.append(Gate(GateKind.CNZ, tuple(range(k))))
        prev = wrapper(i)
        end = len(gates)
        if j == len(flips) - 1:
            for q in sorted(prev):
                gates.append(Gate(GateKind.X, (q,)))
            end = len(gates)
        boundaries.append((start, end))
        start = end
    return Circuit(k, num_aux, tuple(gates), block_boundaries=tuple(boundaries))


def neuron_circuit(w) -> Circuit:
    """Weight circuit followed by the H layer that turns the sum into P(0...0)."""
    base = circ_of_weights(w)
    k = base.num_computing
    h_layer = tuple(Gate(GateKind.H, (q,)) for q in range(k))
    return Circuit(k, base.num_aux, base.gates + h_layer, base.block_boundaries)


def neuron_output_ideal(w, x) -> float:
    """Closed form ((w . x) / sqrt(N))^2."""
    w = check_weights(w)
    x = np.asarray(x, dtype=float)
    if x.shape != (len(w),):
        raise ValueError(f"input length {x.shape} does not match weight length {len(w)}")
    return float(np.dot(w, x) / np.sqrt(len(w))) ** 2


@dataclass(frozen=True)
class Model:
    """One or two neurons sharing an input length.

    Two neurons: predict class 0 iff neuron 0's output >= neuron 1's (ties go
    to class 0). A single neuron thresholds its output at 0.5.
    """

    neurons: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if not 1 <= len(self.neurons) <= 2:
            raise ValueError("model supports one or two neurons")
        lengths = {len(n) for n in self.neurons}
        if len(lengths) != 1:
            raise ValueError("all neurons must share the input length")
        for n in self.neurons:
            check_weights(n)

    @property
    def input_length(self) -> int:
        return len(self.neurons[0])

    def predict_from_outputs(self, outputs) -> int:
        if len(self.neurons) == 1:
            return 0 if outputs[0] >= 0.5 else 1
        return 0 if outputs[0] >= outputs[1] else 1


def model(*neurons) -> Model:
    return Model(tuple(check_weights(n) for n in neurons))


@dataclass(frozen=True)
class Dataset:
    """Unit-norm samples with binary labels; regenerable from its seed."""

    samples: tuple[tuple[tuple[float, ...], int], ...]
    seed: int

    def __post_init__(self):
        for x, label in self.samples:
            if abs(np.linalg.norm(x) - 1.0) > 1e-10:
                raise ValueError("sample is not unit norm")
            if label not in (0, 1):
                raise ValueError(f"label must be 0 or 1, got {label}")

    @property
    def dim(self) -> int:
        return len(self.samples[0][0])

    def inputs(self) -> np.ndarray:
        return np.array([x for x, _ in self.samples])

    def labels(self) -> np.ndarray:
        return np.array([l for _, l in self.samples])


def _output_table(dataset: Dataset) -> np.ndarray:
    """Closed-form neuron outputs for every weight code: shape (2^N, samples)."""
    xs = dataset.inputs()
    n = dataset.dim
    w_all = np.array([weights_from_code(c, n) for c in range(2**n)], dtype=float)
    return (w_all @ xs.T / np.sqrt(n)) ** 2


def best_exhaustive_accuracy(dataset: Dataset, n_neurons: int = 2) -> tuple[float, Model]:
    """Noiseless global optimum over the full weight space, by closed form.

    Guarded to the same 2^20-point cap as the exhaustive trainer strategy.
    """
    n = dataset.dim
    if (2**n) ** n_neurons > 2**20:
        raise ValueError(f"exhaustive space (2^{n})^{n_neurons} exceeds the 2^20 cap")
    p = _output_table(dataset)
    want0 = dataset.labels() == 0
    if n_neurons == 1:
        correct = ((p >= 0.5) == want0[None, :]).mean(axis=1)
        best = int(np.argmax(correct))
        return float(correct[best]), Model((weights_from_code(best, n),))
    best_acc, best_pair = -1.0, (0, 0)
    for i in range(p.shape[0]):
        acc = ((p[i][None, :] >= p) == want0[None, :]).mean(axis=1)
        j = int(np.argmax(acc))
        if acc[j] > best_acc:
            best_acc, best_pair = float(acc[j]), (i, j)
    return best_acc, Model(
        (weights_from_code(best_pair[0], n), weights_from_code(best_pair[1], n))
    )


def make_synthetic_dataset(seed: int, n_samples: int, k: int = 3, sigma: float = 0.15) -> Dataset:
    """Two seeded reference unit vectors, each sample a renormalized Gaussian
    perturbation of one of them, labels alternating so classes stay balanced.

    Regenerates with a bumped internal attempt counter until some ideal model
    reaches 90% on it, so the dataset is learnable by construction.
    """
    if n_samples < 2:
        raise ValueError("need at least two samples")
    n = 2**k
    for attempt in range(64):
        rng = np.random.default_rng(np.random.SeedSequence((seed, attempt)))
        refs = rng.normal(size=(2, n))
        refs /= np.linalg.norm(refs, axis=1, keepdims=True)
        samples = []
        for i in range(n_samples):
            x = refs[i % 2] + sigma * rng.normal(size=n)
            x /= np.linalg.norm(x)
            samples.append((tuple(float(v) for v in x), i % 2))
        ds = Dataset(tuple(samples), seed)
        if k <= 3:
            acc, _ = best_exhaustive_accuracy(ds)
        else:
            # pair scan is quadratic in 2^N; a fixed all-ones partner gives a
            # cheap lower bound that is enough for the learnability gate
            p = _output_table(ds)
            want0 = ds.labels() == 0
            acc = max(
                float(((p >= p[0][None, :]) == want0[None, :]).mean(axis=1).max()),
                float(((p[0][None, :] >= p) == want0[None, :]).mean(axis=1).max()),
            )
        if acc >= 0.9:
            return ds
    raise RuntimeError(f"no learnable dataset found for seed {seed}")


def neuron_probability(
    w,
    x,
    backend: str = "ideal",
    noise: NoiseModel | None = None,
    graph: CouplingGraph | None = None,
    shots: int = 0,
    seed: int | None = None,
    threads: int = 1,
    mapped: MappedCircuit | None = None,
) -> float:
    """P(read 0...0 on the computing qubits) for one neuron on one input.

    Always goes through the compiler, so qubit errors land on the same
    physical qubits for every weight. `mapped` lets callers reuse a compiled
    circuit across inputs.
    """
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}")
    w = check_weights(w)
    k = len(w).bit_length() - 1
    if mapped is None:
        c = neuron_circuit(w)
        mapped = compile(c, graph if graph is not None else linear_chain(c.width))
    init = np.asarray(x, dtype=complex)
    zeros = "0" * k
    if backend == "ideal":
        psi, plan = run_mapped_ideal(mapped, init)
        from .simulator import born_distribution

        return born_distribution(psi, list(plan.measured)).get(zeros, 0.0)
    bound = bind(noise if noise is not None else NoiseModel(), mapped)
    if backend == "density":
        return run_mapped_density(mapped, bound, init).get(zeros, 0.0)
    if shots < 1:
        raise ValueError("trajectories backend needs shots >= 1")
    if seed is None:
        raise ValueError("trajectories backend needs a seed")
    counts = run_mapped_trajectories(mapped, bound, init, shots, seed, threads=threads)
    return counts.counts.get(zeros, 0) / shots


def compile_neuron(w, graph: CouplingGraph | None = None) -> MappedCircuit:
    c = neuron_circuit(w)
    return compile(c, graph if graph is not None else linear_chain(c.width))


def inference(
    model: Model,
    x,
    backend: str = "ideal",
    noise: NoiseModel | None = None,
    graph: CouplingGraph | None = None,
    shots: int = 0,
    seed: int | None = None,
) -> int:
    """Predicted label for one input."""
    outputs = []
    for j, w in enumerate(model.neurons):
        s = derive_seed(seed, j) if seed is not None else None
        outputs.append(
            neuron_probability(w, x, backend, noise, graph, shots, s)
        )
    return model.predict_from_outputs(outputs)


def accuracy(
    model: Model,
    dataset: Dataset,
    backend: str = "ideal",
    noise: NoiseModel | None = None,
    graph: CouplingGraph | None = None,
    shots: int = 0,
    seed: int | None = None,
) -> float:
    """Fraction of correct predictions; deterministic given the seed."""
    if not dataset.samples:
        raise ValueError("dataset is empty")
    mapped = {w: compile_neuron(w, graph) for w in set(model.neurons)}
    correct = 0
    for idx, (x, label) in enumerate(dataset.samples):
        outputs = []
        for j, w in enumerate(model.neurons):
            s = derive_seed(seed, idx, j) if seed is not None else None
            outputs.append(
                neuron_probability(
                    w, x, backend, noise, graph, shots, s, mapped=mapped[w]
                )
            )
        if model.predict_from_outputs(outputs) == label:
            correct += 1
    return correct / len(dataset.samples)


# ---------------------------------------------------------------------------
# File formats


def format_dataset(dataset: Dataset) -> str:
    lines = [f"dim {dataset.dim}"]
    for x, label in dataset.samples:
        lines.append(" ".join(f"{v:.17g}" for v in x) + f" {label}")
    return "\n".join(lines) + "\n"


def parse_dataset(text: str, seed: int = 0) -> Dataset:
    dim = None
    samples = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if dim is None:
            if parts[0] != "dim" or len(parts) != 2:
                raise ValueError(f"line {line_no}: expected header 'dim <N>'")
            dim = int(parts[1])
            continue
        if len(parts) != dim + 1:
            raise ValueError(f"line {line_no}: expected {dim} floats and a label")
        x = tuple(float(v) for v in parts[:dim])
        samples.append((x, int(parts[dim])))
    if dim is None:
        raise ValueError("missing 'dim' header")
    return Dataset(tuple(samples), seed)


def load_dataset(path: str) -> Dataset:
    with open(path, encoding="utf-8") as f:
        return parse_dataset(f.read())


def format_model(model: Model) -> str:
    return "\n".join(" ".join(str(v) for v in w) for w in model.neurons) + "\n"


def parse_model(text: str) -> Model:
    neurons = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        neurons.append(tuple(int(v) for v in line.split()))
    if not neurons:
        raise ValueError("model file has no neurons")
    return Model(tuple(neurons))


def load_model(path: str) -> Model:
    with open(path, encoding="utf-8") as f:
        return parse_model(f.read())


def bundled_dataset_path() -> str:
    """Path of the pinned synthetic dataset shipped with the package."""
    return str(resources.files("qnz").joinpath("data/synthetic_k3.txt"))
