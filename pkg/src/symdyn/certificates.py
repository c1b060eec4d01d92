"""Deterministic verification envelopes and replayable run manifests.

Every headline check in this package can emit a *certificate envelope*: a
small JSON document recording what was claimed, the raw inputs needed to
rebuild the check from scratch, the scale it ran at, the verdict, and the
evidence the checker produced.  Envelopes are serialized canonically
(sorted keys, fixed separators, no timestamps), so a re-run from the same
inputs yields byte-identical artifacts.

Verification never trusts the stored verdict or evidence.  Each claim kind
registers a *rebuilder* that reconstructs the whole envelope from the raw
inputs alone; :func:`verify_envelope` re-runs it and byte-compares.  Any
edit to the verdict or to the evidence therefore fails re-verification,
and an edit to the inputs turns the envelope into a different claim that
is re-checked on its own terms.
"""

from __future__ import annotations

import hashlib
import importlib
import json
from dataclasses import dataclass, field
from typing import Callable, Optional

ENVELOPE_VERSION = 1

ENVELOPE_KEYS = ("claim", "module", "inputs", "scale", "verdict", "evidence", "version")


class CertificateError(RuntimeError):
    """Malformed envelope or manifest."""


def canonical_json(obj) -> str:
    """Canonical serialization: sorted keys, minimal separators, no NaN."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def envelope_digest(env: dict) -> str:
    return hashlib.sha256(canonical_json(env).encode("utf-8")).hexdigest()


def make_envelope(
    claim: str,
    module: str,
    inputs: dict,
    scale: int,
    verdict: bool,
    evidence: dict,
) -> dict:
    env = {
        "claim": claim,
        "module": module,
        "inputs": inputs,
        "scale": scale,
        "verdict": verdict,
        "evidence": evidence,
        "version": ENVELOPE_VERSION,
    }
    check_envelope_shape(env)
    return env


def check_envelope_shape(env: dict) -> None:
    if not isinstance(env, dict) or set(env) != set(ENVELOPE_KEYS):
        raise CertificateError(
            f"envelope must have exactly the keys {list(ENVELOPE_KEYS)}"
        )
    if not isinstance(env["claim"], str) or not env["claim"]:
        raise CertificateError("claim must be a non-empty string")
    if not isinstance(env["module"], str):
        raise CertificateError("module must be a string")
    if not isinstance(env["inputs"], dict) or not isinstance(env["evidence"], dict):
        raise CertificateError("inputs and evidence must be objects")
    if not isinstance(env["scale"], int) or isinstance(env["scale"], bool):
        raise CertificateError("scale must be an integer")
    if not isinstance(env["verdict"], bool):
        raise CertificateError("verdict must be a boolean")
    if env["version"] != ENVELOPE_VERSION:
        raise CertificateError(f"unsupported envelope version {env['version']!r}")
    # Canonical form must exist (catches non-JSON values early).
    canonical_json(env)


def write_certificate(path: str, env: dict) -> str:
    check_envelope_shape(env)
    text = canonical_json(env) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return text


def load_certificate(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        env = json.load(fh)
    check_envelope_shape(env)
    return env


# -- claim registry ---------------------------------------------------------

_REBUILDERS: dict[str, Callable[[dict], dict]] = {}

_CLAIM_MODULES = (
    "symdyn.irreducibility",
    "symdyn.constructions",
    "symdyn.scp",
)


def register_rebuilder(claim: str):
    """Register ``fn(inputs) -> envelope`` as the rebuilder for ``claim``."""

    def wrap(fn: Callable[[dict], dict]):
        if claim in _REBUILDERS:
            raise CertificateError(f"duplicate rebuilder for claim {claim!r}")
        _REBUILDERS[claim] = fn
        return fn

    return wrap


def _load_claim_modules() -> None:
    for mod in _CLAIM_MODULES:
        importlib.import_module(mod)


def known_claims() -> tuple[str, ...]:
    _load_claim_modules()
    return tuple(sorted(_REBUILDERS))


@dataclass(frozen=True)
class VerificationResult:
    ok: bool
    detail: str
    rebuilt: Optional[dict] = field(default=None, compare=False)


def _first_difference(stored: dict, rebuilt: dict) -> str:
    for key in ENVELOPE_KEYS:
        a, b = stored.get(key), rebuilt.get(key)
        if canonical_json(a) != canonical_json(b):
            if isinstance(a, dict) and isinstance(b, dict):
                for sub in sorted(set(a) | set(b)):
                    if canonical_json(a.get(sub)) != canonical_json(b.get(sub)):
                        return f"{key}.{sub}: stored {a.get(sub)!r} != recomputed {b.get(sub)!r}"
            return f"{key}: stored {a!r} != recomputed {b!r}"
    return "no difference"


def verify_envelope(env: dict) -> VerificationResult:
    """Rebuild the envelope from its raw inputs and byte-compare."""
    try:
        check_envelope_shape(env)
    except CertificateError as exc:
        return VerificationResult(False, f"malformed envelope: {exc}")
    _load_claim_modules()
    fn = _REBUILDERS.get(env["claim"])
    if fn is None:
        return VerificationResult(False, f"unknown claim {env['claim']!r}")
    try:
        rebuilt = fn(env["inputs"])
    except Exception as exc:  # noqa: BLE001 - report, never crash the verifier
        return VerificationResult(False, f"rebuild failed: {exc}")
    if canonical_json(rebuilt) == canonical_json(env):
        verdict = "holds" if env["verdict"] else "fails (as recorded)"
        return VerificationResult(True, f"reproduced byte-identically; claim {verdict}", rebuilt)
    return VerificationResult(False, _first_difference(env, rebuilt), rebuilt)


# -- run manifests ----------------------------------------------------------

MANIFEST_VERSION = 1


@dataclass(frozen=True)
class RunManifest:
    """Enough to re-run a CLI invocation and check outputs byte for byte."""

    argv: tuple[str, ...]
    outputs: tuple[tuple[str, str], ...]  # (path, sha256 of file text)
    version: int = MANIFEST_VERSION

    def to_json(self) -> dict:
        return {
            "argv": list(self.argv),
            "outputs": [[p, d] for p, d in self.outputs],
            "version": self.version,
        }

    @staticmethod
    def from_json(obj: dict) -> "RunManifest":
        if not isinstance(obj, dict) or obj.get("version") != MANIFEST_VERSION:
            raise CertificateError("unsupported manifest")
        argv = obj.get("argv")
        outs = obj.get("outputs")
        if not isinstance(argv, list) or not all(isinstance(a, str) for a in argv):
            raise CertificateError("manifest argv must be a list of strings")
        if not isinstance(outs, list):
            raise CertificateError("manifest outputs must be a list")
        pairs = []
        for item in outs:
            if (
                not isinstance(item, list)
                or len(item) != 2
                or not all(isinstance(x, str) for x in item)
            ):
                raise CertificateError("manifest output entries are [path, digest]")
            pairs.append((item[0], item[1]))
        return RunManifest(tuple(argv), tuple(pairs))


def file_digest(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def write_manifest(path: str, manifest: RunManifest) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(manifest.to_json()) + "\n")


def load_manifest(path: str) -> RunManifest:
    with open(path, "r", encoding="utf-8") as fh:
        return RunManifest.from_json(json.load(fh))
