"""The ``forge`` command line: build, evaluate, synthesize, verify, demo.

Artifacts (trees, orders, homeomorphisms) are stored content-addressed under
``.forge/`` (override with FORGE_HOME): the handle is a hash of the canonical
spec text, so rebuilding the same spec always yields the same handle and
byte-identical outputs.  All numbers print as exact rationals.

Exit codes: 0 success, 1 verification failure, 2 parse error, 3 budget
exhaustion, 4 domain or type error.
"""

from __future__ import annotations

import hashlib
import json
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path as FsPath
from typing import Optional

import click

from .cantor import Tree, parse_tree_spec
from .conjugacy import (
    Homeo,
    default_verification_grid,
    order_iso_for,
    synth_conjugacy,
    verify_conjugacy,
)
from .dynamics import build_dynamics
from .errors import (
    BudgetExhaustedError,
    ForgeError,
    MalformedOrderError,
    NotInCantorSetError,
    OrderIsoValidationError,
    OutOfDomainError,
    PrecisionExhaustedError,
    SpecParseError,
)
from .exact import format_rational, identity_code, parse_rational, reflection_code
from .orders import build_order_tree, parse_order_lines
from .reduction import CeSample, run_demo

EXIT_VERIFY_FAIL = 1
EXIT_PARSE = 2
EXIT_BUDGET = 3
EXIT_DOMAIN = 4

_SPEC_KINDS = ("tree", "order", "pipeline")
_KNOWN_KEYS = {
    "tree": {"kind", "tree", "precision", "budget"},
    "order": {"kind", "precision", "budget", "depth"},
    "pipeline": {"kind", "sample", "count", "precision", "budget"},
}


@dataclass
class SpecFile:
    """Parsed spec: header keys plus body lines (orders only)."""

    kind: str
    fields: dict[str, str]
    body: list[str]

    def canonical(self) -> str:
        lines = [f"kind: {self.kind}"]
        for key in sorted(self.fields):
            if key != "kind":
                lines.append(f"{key}: {self.fields[key]}")
        lines.extend(self.body)
        return "\n".join(lines) + "\n"


def parse_spec_text(text: str) -> SpecFile:
    fields: dict[str, str] = {}
    body: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith(("elem ", "lt ")):
            body.append(line)
            continue
        if ":" not in line:
            raise SpecParseError(f"expected 'key: value', got {line!r}", line=lineno)
        key, value = line.split(":", 1)
        key = key.strip()
        if key == "tree":
            # tree specs may themselves contain colons (Q: 1,3)
            fields[key] = line.split(":", 1)[1].strip()
        else:
            fields[key] = value.strip()
    kind = fields.get("kind")
    if kind not in _SPEC_KINDS:
        raise SpecParseError(f"kind must be one of {_SPEC_KINDS}, got {kind!r}")
    unknown = set(fields) - _KNOWN_KEYS[kind]
    if unknown:
        raise SpecParseError(f"unknown keys for kind {kind}: {sorted(unknown)}")
    if kind == "order" and not body:
        raise SpecParseError("order spec needs elem/lt lines")
    if kind == "tree" and "tree" not in fields:
        raise SpecParseError("tree spec needs a 'tree:' line")
    if kind != "order" and body:
        raise SpecParseError(f"elem/lt lines are only valid for kind order")
    spec = SpecFile(kind=kind, fields=fields, body=body)
    # round-trip guarantee: the canonical text parses to the same spec
    return spec


# ---------------------------------------------------------------------------
# store

def store_dir() -> FsPath:
    root = os.environ.get("FORGE_HOME", ".forge")
    path = FsPath(root)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _handle_for(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def store_artifact(payload: dict) -> str:
    handle = _handle_for(payload)
    target = store_dir() / f"{handle}.json"
    if not target.exists():
        tmp = target.with_suffix(".tmp")
        tmp.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")
        tmp.replace(target)
    return handle


def load_artifact(handle: str) -> dict:
    target = store_dir() / f"{handle}.json"
    if not target.exists():
        raise SpecParseError(f"no artifact with handle {handle}")
    return json.loads(target.read_text())


def tree_from_artifact(payload: dict) -> Tree:
    if payload.get("kind") == "tree":
        return parse_tree_spec(payload["spec"])
    if payload.get("kind") == "order":
        order = parse_order_lines(payload["body"])
        depth = int(payload.get("depth", 2 * (order.size or 1) + 4))
        return build_order_tree(order, depth)
    raise SpecParseError(f"artifact kind {payload.get('kind')!r} is not a tree")


def homeo_from_artifact(payload: dict, budget: int) -> tuple[Homeo, Tree, Tree]:
    if payload.get("kind") != "homeo":
        raise SpecParseError(f"artifact kind {payload.get('kind')!r} is not a homeo")
    domain = tree_from_artifact(load_artifact(payload["domain"]))
    image = tree_from_artifact(load_artifact(payload["image"]))
    iso = order_iso_for(domain, image)
    return synth_conjugacy(domain, image, iso, iteration_budget=budget), domain, image


def resolve_homeo(handle: str, budget: int) -> tuple[Homeo, Optional[Tree], Optional[Tree]]:
    """Resolve a homeo handle; 'identity' and 'reflection' are built in."""
    if handle == "identity":
        return Homeo(fn=identity_code(), inv=identity_code()), None, None
    if handle == "reflection":
        return Homeo(fn=reflection_code(), inv=reflection_code()), None, None
    h, dom, img = homeo_from_artifact(load_artifact(handle), budget)
    return h, dom, img


# ---------------------------------------------------------------------------
# commands

@click.group()
def main():
    """Computable tree dynamics, conjugacy synthesis, and verification."""


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _run(fn):
    try:
        fn()
    except (SpecParseError, MalformedOrderError) as exc:
        _fail(EXIT_PARSE, str(exc))
    except (BudgetExhaustedError, PrecisionExhaustedError) as exc:
        _fail(EXIT_BUDGET, str(exc))
    except (OutOfDomainError, NotInCantorSetError, OrderIsoValidationError) as exc:
        _fail(EXIT_DOMAIN, str(exc))
    except ForgeError as exc:
        _fail(EXIT_DOMAIN, str(exc))


@main.command()
@click.argument("specfile", type=click.Path(exists=True, dir_okay=False))
def build(specfile):
    """Parse a spec file and store the artifact; prints the handle."""

    def go():
        spec = parse_spec_text(FsPath(specfile).read_text())
        if spec.kind == "tree":
            parse_tree_spec(spec.fields["tree"])  # validate
            payload = {"kind": "tree", "spec": spec.fields["tree"]}
        elif spec.kind == "order":
            parse_order_lines(spec.body)  # validate
            payload = {"kind": "order", "body": spec.body}
            if "depth" in spec.fields:
                payload["depth"] = int(spec.fields["depth"])
        else:
            sample = _parse_sample(spec.fields.get("sample", ""))
            payload = {"kind": "pipeline",
                       "sample": list(sample.enumeration),
                       "count": int(spec.fields.get("count", 4))}
        click.echo(store_artifact(payload))

    _run(go)


def _parse_sample(text: str) -> CeSample:
    text = text.strip()
    if not text:
        return CeSample(())
    try:
        return CeSample(tuple(int(tok) for tok in text.split(",")))
    except ValueError as exc:
        raise SpecParseError(f"bad sample list {text!r}") from exc


@main.command(name="eval")
@click.argument("handle")
@click.argument("x")
@click.option("--precision", "-p", default=30, show_default=True)
def eval_cmd(handle, x, precision):
    """Evaluate the artifact's dynamics at a rational point."""

    def go():
        tree = tree_from_artifact(load_artifact(handle))
        code = build_dynamics(tree)
        q = parse_rational(x)
        if q < 0 or q > 1:
            raise OutOfDomainError(f"{x} outside [0,1]")
        val = code.rational_eval(q).query(precision)
        click.echo(f"{format_rational(val)} ± 2^-{precision}")

    _run(go)


@main.command()
@click.argument("handle")
@click.option("--samples", "-n", default=33, show_default=True)
@click.option("--precision", "-p", default=20, show_default=True)
@click.option("--uniform", is_flag=True,
              help="Force a uniform grid (may exhaust budgets on homeos).")
@click.option("--budget", default=10_000, show_default=True)
def plot(handle, samples, precision, uniform, budget):
    """Emit x,f(x) CSV rows for the artifact's map."""

    def go():
        if samples < 2:
            raise SpecParseError("need at least two samples")
        payload = load_artifact(handle) if handle not in ("identity", "reflection") \
            else None
        if payload is not None and payload.get("kind") == "homeo":
            h, domain, _ = resolve_homeo(handle, budget)
            code = h.fn
            if uniform:
                grid = [Fraction(i, samples - 1) for i in range(samples)]
            else:
                grid = default_verification_grid(domain, samples, homeo=h)
        else:
            code = identity_code() if payload is None and handle == "identity" \
                else reflection_code() if payload is None \
                else build_dynamics(tree_from_artifact(payload))
            grid = [Fraction(i, samples - 1) for i in range(samples)]
        click.echo("x,f(x)")
        for q in grid:
            val = code.rational_eval(q).query(precision)
            click.echo(f"{format_rational(q)},{format_rational(val)}")

    _run(go)


@main.command()
@click.argument("domain_handle")
@click.argument("image_handle")
def synth(domain_handle, image_handle):
    """Store the synthesized conjugacy between two tree artifacts."""

    def go():
        domain = tree_from_artifact(load_artifact(domain_handle))
        image = tree_from_artifact(load_artifact(image_handle))
        order_iso_for(domain, image)  # validates compatibility
        payload = {"kind": "homeo", "domain": domain_handle,
                   "image": image_handle}
        click.echo(store_artifact(payload))

    _run(go)


@main.command()
@click.argument("f_handle")
@click.argument("g_handle")
@click.argument("h_handle")
@click.option("--grid", "-g", "grid_size", default=100, show_default=True)
@click.option("--precision", "-p", default=20, show_default=True)
@click.option("--budget", default=10_000, show_default=True)
def verify(f_handle, g_handle, h_handle, grid_size, precision, budget):
    """Check the conjugacy equation on a grid; nonzero exit on failure."""

    def go():
        f_tree = tree_from_artifact(load_artifact(f_handle))
        g_tree = tree_from_artifact(load_artifact(g_handle))
        f = build_dynamics(f_tree)
        g = build_dynamics(g_tree)
        h, dom, _ = resolve_homeo(h_handle, budget)
        grid_tree = dom if dom is not None else f_tree
        grid = default_verification_grid(grid_tree, grid_size,
                                         homeo=h if dom is not None else None)
        report = verify_conjugacy(f, g, h, grid, precision)
        click.echo(report.to_csv(), nl=False)
        if not report.passed:
            sys.exit(EXIT_VERIFY_FAIL)

    _run(go)


@main.command()
@click.argument("handle", required=False)
@click.option("--sample", "-s", default=None,
              help="Comma-separated enumeration, e.g. '1,3'.")
@click.option("--count", "-c", default=4, show_default=True)
@click.option("--budget", default=10_000, show_default=True)
def demo(handle, sample, count, budget):
    """Run the end-to-end complement-extraction pipeline."""

    def go():
        if handle is not None:
            payload = load_artifact(handle)
            if payload.get("kind") != "pipeline":
                raise SpecParseError("demo needs a pipeline artifact")
            ce = CeSample(tuple(payload["sample"]))
            n = int(payload.get("count", count))
        else:
            ce = _parse_sample(sample or "")
            n = count
        report = run_demo(ce, n, iteration_budget=budget)
        click.echo(report.to_text(), nl=False)
        if not report.ok:
            sys.exit(EXIT_VERIFY_FAIL)

    _run(go)


@main.command()
@click.argument("h_handle")
@click.option("--count", "-c", default=4, show_default=True)
@click.option("--budget", default=10_000, show_default=True)
def extract(h_handle, count, budget):
    """Extract complement elements from a stored conjugacy."""

    def go():
        from .conjugacy import extract_order_iso
        from .reduction import recover_ce_complement

        h, dom, img = resolve_homeo(h_handle, budget)
        if dom is None:
            raise OutOfDomainError("extraction needs a synthesized homeo handle")
        iso = extract_order_iso(h, dom, img)
        values = recover_ce_complement(iso, count)
        for n, m in enumerate(values):
            click.echo(f"{n} {m}")

    _run(go)


if __name__ == "__main__":
    main()
