"""Matrix and parameter-set persistence.

Both formats put a human-readable UTF-8 header in front of raw
little-endian float64 payloads, so headers diff cleanly while payloads
round-trip bit for bit.

Matrix files are one header line::

    STTPMAT v1 rows=<R> cols=<C> dtype=f64 order=row-major\n

followed by exactly ``8 * R * C`` payload bytes in row-major order.

Parameter files open with a manifest section terminated by a blank line:
scheme, dims, rank, spectrum mode, regularizer weight, the factorizations
and rank schedule (chain scheme only), the sign vector (identity spectrum
only; signs are not free parameters and live in the manifest), and one
``block=<name> <count>`` line per payload block.  The blocks' concatenated
float64 payloads follow in manifest order, and their counts add up to the
scheme's free-parameter count exactly.
"""

from __future__ import annotations

import numpy as np

from . import householder as hh
from .errors import FileFormatError
from .spectral import SpectrumParams
from .spectrum_modes import IDENTITY, SPECTRUM_MODES
from .sttp import SttpParams, build_schedule, core_specs, factorize
from .svdp import SvdpParams

__all__ = ["write_matrix", "read_matrix", "write_params", "read_params"]

_MATRIX_MAGIC = "STTPMAT v1"
_PARAMS_MAGIC = "STTPPARAMS v1"


def write_matrix(path, m: np.ndarray) -> None:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise FileFormatError("matrix files hold 2-D arrays")
    rows, cols = m.shape
    header = f"{_MATRIX_MAGIC} rows={rows} cols={cols} dtype=f64 order=row-major\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("utf-8"))
        fh.write(np.ascontiguousarray(m).astype("<f8").tobytes())


def read_matrix(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.readline()
        payload = fh.read()
    try:
        text = header.decode("utf-8").rstrip("\n")
    except UnicodeDecodeError as exc:
        raise FileFormatError("matrix header is not UTF-8") from exc
    parts = text.split(" ")
    if parts[:2] != _MATRIX_MAGIC.split(" ") or len(parts) != 6:
        raise FileFormatError(f"bad matrix header: {text!r}")
    fields = dict(p.split("=", 1) for p in parts[2:])
    if fields.get("dtype") != "f64" or fields.get("order") != "row-major":
        raise FileFormatError(f"unsupported matrix encoding: {text!r}")
    try:
        rows, cols = int(fields["rows"]), int(fields["cols"])
    except (KeyError, ValueError) as exc:
        raise FileFormatError(f"bad matrix header: {text!r}") from exc
    if rows < 1 or cols < 1:
        raise FileFormatError("matrix dims must be positive")
    if len(payload) != 8 * rows * cols:
        raise FileFormatError(
            f"payload is {len(payload)} bytes, expected {8 * rows * cols}"
        )
    return np.frombuffer(payload, dtype="<f8").reshape(rows, cols).copy()


def _int_list(values) -> str:
    return ",".join(str(int(v)) for v in values)


def _params_blocks(params) -> list[tuple[str, np.ndarray]]:
    if isinstance(params, SvdpParams):
        blocks = [("u", params.u_layout.params), ("v", params.v_layout.params)]
    else:
        blocks = [(f"u_core_{k + 1}", la.params)
                  for k, la in enumerate(params.u_layouts)]
        blocks.extend((f"v_core_{k + 1}", la.params)
                      for k, la in enumerate(params.v_layouts))
    if params.spectrum.mode != IDENTITY:
        blocks.append(("sigma", params.spectrum.s))
    return blocks


def write_params(path, params) -> None:
    if not isinstance(params, (SvdpParams, SttpParams)):
        raise FileFormatError(f"cannot serialize {type(params)!r}")
    scheme = "svdp" if isinstance(params, SvdpParams) else "sttp"
    lines = [
        _PARAMS_MAGIC,
        f"scheme={scheme}",
        f"dout={params.d_out}",
        f"din={params.d_in}",
        f"rank={params.r}",
        f"spectrum={params.spectrum.mode}",
        f"lambda={params.spectrum.lam!r}",
    ]
    if params.spectrum.mode == IDENTITY:
        lines.append(f"signs={_int_list(params.spectrum.signs)}")
    if scheme == "sttp":
        lines.append(f"out_factors={_int_list(params.out_fac.factors)}")
        lines.append(f"in_factors={_int_list(params.in_fac.factors)}")
        lines.append(f"rank_schedule={_int_list(params.schedule.ranks)}")
    blocks = _params_blocks(params)
    lines.extend(f"block={name} {vals.size}" for name, vals in blocks)
    manifest = "\n".join(lines) + "\n\n"
    with open(path, "wb") as fh:
        fh.write(manifest.encode("utf-8"))
        for _, vals in blocks:
            fh.write(np.ascontiguousarray(vals).astype("<f8").tobytes())


def _parse_manifest(raw: bytes):
    sep = raw.find(b"\n\n")
    if sep < 0:
        raise FileFormatError("parameter manifest not terminated by blank line")
    try:
        text = raw[:sep].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FileFormatError("parameter manifest is not UTF-8") from exc
    lines = text.split("\n")
    if lines[0] != _PARAMS_MAGIC:
        raise FileFormatError(f"bad parameter magic: {lines[0]!r}")
    fields: dict[str, str] = {}
    blocks: list[tuple[str, int]] = []
    for line in lines[1:]:
        if "=" not in line:
            raise FileFormatError(f"bad manifest line: {line!r}")
        key, value = line.split("=", 1)
        if key == "block":
            try:
                name, count = value.rsplit(" ", 1)
                blocks.append((name, int(count)))
            except ValueError as exc:
                raise FileFormatError(f"bad block line: {line!r}") from exc
        else:
            if key in fields:
                raise FileFormatError(f"duplicate manifest field {key!r}")
            fields[key] = value
    return fields, blocks, raw[sep + 2:]


def read_params(path):
    """Reconstruct a parameter set; a rewrite reproduces the file bitwise."""
    with open(path, "rb") as fh:
        raw = fh.read()
    fields, blocks, payload = _parse_manifest(raw)
    try:
        scheme = fields["scheme"]
        d_out, d_in = int(fields["dout"]), int(fields["din"])
        r = int(fields["rank"])
        mode = fields["spectrum"]
        lam = float(fields["lambda"])
    except (KeyError, ValueError) as exc:
        raise FileFormatError(f"incomplete manifest: {exc}") from exc
    if mode not in SPECTRUM_MODES:
        raise FileFormatError(f"unknown spectrum mode {mode!r}")
    total = sum(count for _, count in blocks)
    if len(payload) != 8 * total:
        raise FileFormatError(
            f"payload is {len(payload)} bytes, expected {8 * total}"
        )
    values = np.frombuffer(payload, dtype="<f8")
    chunks: dict[str, np.ndarray] = {}
    pos = 0
    for name, count in blocks:
        if name in chunks:
            raise FileFormatError(f"duplicate block {name!r}")
        chunks[name] = values[pos: pos + count].copy()
        pos += count

    def take(name, expected):
        if name not in chunks:
            raise FileFormatError(f"missing block {name!r}")
        got = chunks.pop(name)
        if got.size != expected:
            raise FileFormatError(
                f"block {name!r} holds {got.size} values, expected {expected}"
            )
        return got

    if mode == IDENTITY:
        try:
            signs = np.array([float(v) for v in fields["signs"].split(",")])
        except (KeyError, ValueError) as exc:
            raise FileFormatError("identity spectrum needs a signs field") from exc
        spectrum = SpectrumParams(IDENTITY, r, None, signs, lam)
    else:
        spectrum = SpectrumParams(mode, r, take("sigma", r), None, lam)

    try:
        if scheme == "svdp":
            u_variant = hh.REDUCED if mode == IDENTITY else hh.FULL
            u_layout = hh.make_layout(d_out, r, u_variant,
                                      take("u", hh.dof(d_out, r, u_variant)))
            v_layout = hh.make_layout(d_in, r, hh.FULL,
                                      take("v", hh.dof(d_in, r, hh.FULL)))
            params = SvdpParams(d_out, d_in, r, u_layout, v_layout, spectrum)
        elif scheme == "sttp":
            out_fac, in_fac = factorize(d_out), factorize(d_in)
            if fields.get("out_factors") != _int_list(out_fac.factors) or \
                    fields.get("in_factors") != _int_list(in_fac.factors):
                raise FileFormatError("factorization fields do not match dims")
            sched = build_schedule(out_fac, in_fac, r)
            if fields.get("rank_schedule") != _int_list(sched.ranks):
                raise FileFormatError("rank schedule does not match the policy")
            u_specs, v_specs = core_specs(out_fac, in_fac, r, mode)
            u_layouts = tuple(
                hh.make_layout(*spec.frame_dims, spec.variant,
                               take(f"u_core_{k + 1}",
                                    hh.dof(*spec.frame_dims, spec.variant)))
                for k, spec in enumerate(u_specs)
            )
            v_layouts = tuple(
                hh.make_layout(*spec.frame_dims, spec.variant,
                               take(f"v_core_{k + 1}",
                                    hh.dof(*spec.frame_dims, spec.variant)))
                for k, spec in enumerate(v_specs)
            )
            params = SttpParams(out_fac, in_fac, r, sched, u_layouts,
                                v_layouts, spectrum)
        else:
            raise FileFormatError(f"unknown scheme {scheme!r}")
    except FileFormatError:
        raise
    except Exception as exc:
        raise FileFormatError(f"inconsistent parameter file: {exc}") from exc
    if chunks:
        raise FileFormatError(f"unused blocks: {sorted(chunks)}")
    return params
