"""Plain-text configuration files for benchmark specs and run options.

The format is flat ``key = value`` under section headers, readable by
configparser.  Floats are serialized with repr() so that a round trip
through text reproduces the spec bit-exactly.  Initial data is
referenced by name; the shipped benchmarks register theirs in the
problems module.
"""

import configparser
import hashlib
import io

import numpy as np

from .errors import ConfigurationError
from .problems import BenchmarkSpec, BoundaryRuleSpec, RegionSpec


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _fmt_seq(seq):
    return ", ".join(_fmt(v) for v in seq)


def _parse_floats(s):
    return tuple(float(x) for x in s.split(",") if x.strip() != "")


def _parse_ints(s):
    return tuple(int(x) for x in s.split(",") if x.strip() != "")


def _parse_bool(s):
    s = s.strip().lower()
    if s in ("true", "1", "yes", "on"):
        return True
    if s in ("false", "0", "no", "off"):
        return False
    raise ConfigurationError("not a boolean: %r" % s)


def spec_to_text(spec):
    """Serialize a BenchmarkSpec to the config format."""
    out = io.StringIO()
    w = out.write
    w("[benchmark]\n")
    w("name = %s\n" % spec.name)
    w("description = %s\n" % spec.description)
    w("dimension = %d\n" % spec.dimension)
    w("initial = %s\n" % spec.initial)
    w("tableau = %s\n" % spec.tableau)
    w("flux = %s\n" % spec.flux)
    w("k = %d\n" % spec.k)
    w("cfl = %s\n" % _fmt(spec.cfl))
    w("final_time = %s\n" % _fmt(spec.final_time))
    w("eps = %s\n" % _fmt(spec.eps))
    w("sigma0 = %s\n" % _fmt(spec.sigma0))
    w("a = %s\n" % _fmt(spec.a))
    w("c = %s\n" % _fmt(spec.c))
    w("limiter = %s\n" % _fmt(spec.limiter))
    w("limit_vars = %s\n" % ", ".join(spec.limit_vars))
    w("interface_policy = %s\n" % _fmt(spec.interface_policy))
    w("probe_stride = %d\n" % spec.probe_stride)
    w("n_angles = %s\n" % _fmt_seq(spec.n_angles))
    w("\n[domain]\n")
    w("x = %s\n" % _fmt_seq(spec.domain[0]))
    if spec.dimension > 1:
        w("y = %s\n" % _fmt_seq(spec.domain[1]))
    w("cells = %s\n" % _fmt_seq(spec.cells))
    w("\n[snapshots]\n")
    w("times = %s\n" % _fmt_seq(spec.snapshot_times))
    for i, reg in enumerate(spec.regions):
        w("\n[material.%d]\n" % i)
        w("law = %s\n" % reg.law_kind)
        w("value = %s\n" % _fmt(reg.law_value))
        w("density = %s\n" % _fmt(reg.density))
        w("cv = %s\n" % _fmt(reg.cv_specific))
        if reg.rect is not None:
            w("rect = %s\n" % _fmt_seq(
                [v for pair in reg.rect for v in pair]))
    for side, rule in spec.boundaries:
        w("\n[boundary.%s]\n" % side)
        w("kind = %s\n" % rule.kind)
        if rule.t_source is not None:
            w("t_source = %s\n" % _fmt(rule.t_source))
        if rule.span is not None:
            w("span = %s\n" % _fmt_seq(rule.span))
    if spec.probes:
        w("\n[probes]\n")
        for label, pos in spec.probes:
            w("%s = %s\n" % (label, _fmt_seq(pos)))
    return out.getvalue()


def spec_from_text(text):
    """Parse the config format back into a BenchmarkSpec."""
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError("config parse error: %s" % exc) from exc
    try:
        b = cp["benchmark"]
        dim = int(b["dimension"])
        domain = (_parse_floats(cp["domain"]["x"]),)
        if dim > 1:
            domain = domain + (_parse_floats(cp["domain"]["y"]),)
        regions = []
        i = 0
        while cp.has_section("material.%d" % i):
            m = cp["material.%d" % i]
            rect = None
            if "rect" in m:
                vals = _parse_floats(m["rect"])
                rect = tuple(tuple(vals[j:j + 2])
                             for j in range(0, len(vals), 2))
            regions.append(RegionSpec(m["law"], float(m["value"]),
                                      float(m["density"]), float(m["cv"]),
                                      rect))
            i += 1
        boundaries = []
        for side in ("xlo", "xhi", "ylo", "yhi"):
            sec = "boundary.%s" % side
            if cp.has_section(sec):
                s = cp[sec]
                boundaries.append((side, BoundaryRuleSpec(
                    s["kind"],
                    float(s["t_source"]) if "t_source" in s else None,
                    _parse_floats(s["span"]) if "span" in s else None)))
        probes = ()
        if cp.has_section("probes"):
            probes = tuple((label.upper(), _parse_floats(val))
                           for label, val in cp["probes"].items())
        return BenchmarkSpec(
            name=b["name"], dimension=dim, domain=domain,
            cells=_parse_ints(cp["domain"]["cells"]),
            k=int(b["k"]), tableau=b["tableau"], cfl=float(b["cfl"]),
            final_time=float(b["final_time"]),
            snapshot_times=_parse_floats(cp["snapshots"]["times"]),
            eps=float(b["eps"]), sigma0=float(b["sigma0"]),
            a=float(b["a"]), c=float(b["c"]),
            regions=tuple(regions), boundaries=tuple(boundaries),
            initial=b["initial"], n_angles=_parse_ints(b["n_angles"]),
            flux=b["flux"], limiter=_parse_bool(b["limiter"]),
            limit_vars=tuple(v.strip()
                             for v in b["limit_vars"].split(",")),
            interface_policy=_parse_bool(b["interface_policy"]),
            probes=probes, probe_stride=int(b["probe_stride"]),
            description=b.get("description", ""),
        )
    except (KeyError, ValueError) as exc:
        raise ConfigurationError("invalid config: %s" % exc) from exc


def config_hash(spec):
    """Short stable hash identifying a resolved configuration."""
    return hashlib.sha256(spec_to_text(spec).encode()).hexdigest()[:12]
