"""Out-of-process backend worker speaking the pipe protocol of
docs/backend-abi.md.

Message framing (little-endian): u32 payload length, then payload =
u8 opcode, u32 header length, UTF-8 JSON header, then zero or more buffers,
each u8 dtype tag (0 = float32, 1 = int64), u64 element count, raw bytes.
Opcodes: 1 initialize, 2 query-capabilities, 3 forward, 4 forward-fused,
5 finalize; replies carry opcode|0x80, errors opcode 0xFF with
{"error": message}.

Run a worker with `python -m nnbench.worker --backend reference`; the
harness side is PipeBackend, loadable as backend name "worker:reference".
"""

from __future__ import annotations

import argparse
import json
import struct
import subprocess
import sys

import numpy as np

from .kernels import PoolSwitches
from .registry.netspec import layer_from_obj, layer_to_obj
from .types import LayerSpec

OP_INIT = 1
OP_CAPS = 2
OP_FORWARD = 3
OP_FUSED = 4
OP_FINI = 5
OP_ERROR = 0xFF

_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<i8")}
_DTYPE_TAGS = {np.dtype("float32"): 0, np.dtype("int64"): 1}


def encode_message(opcode: int, header: dict, buffers=()) -> bytes:
    hb = json.dumps(header, sort_keys=True).encode("utf-8")
    parts = [struct.pack("<BI", opcode, len(hb)), hb]
    for arr in buffers:
        arr = np.ascontiguousarray(arr)
        tag = _DTYPE_TAGS[arr.dtype]
        parts.append(struct.pack("<BQ", tag, arr.size))
        parts.append(arr.tobytes())
    payload = b"".join(parts)
    return struct.pack("<I", len(payload)) + payload


def decode_message(payload: bytes):
    opcode = payload[0]
    (hlen,) = struct.unpack_from("<I", payload, 1)
    header = json.loads(payload[5 : 5 + hlen].decode("utf-8"))
    buffers = []
    off = 5 + hlen
    while off < len(payload):
        tag, count = struct.unpack_from("<BQ", payload, off)
        off += 9
        dt = _DTYPES[tag]
        nbytes = int(count) * dt.itemsize
        buffers.append(np.frombuffer(payload, dtype=dt, count=int(count), offset=off).copy())
        off += nbytes
    return opcode, header, buffers


def read_message(stream):
    raw = stream.read(4)
    if len(raw) < 4:
        return None
    (length,) = struct.unpack("<I", raw)
    payload = stream.read(length)
    if len(payload) < length:
        return None
    return decode_message(payload)


def _pack_params(spec: LayerSpec, params: dict):
    roles = sorted(params)
    return roles, [np.ascontiguousarray(params[r], dtype=np.float32).reshape(-1) for r in roles]


def _unpack_params(spec: LayerSpec, header_roles, header_shapes, buffers):
    out = {}
    for role, shape, buf in zip(header_roles, header_shapes, buffers):
        out[role] = buf.reshape(shape)
    return out


def serve(backend, rin, rout) -> None:
    """Worker main loop over binary streams."""
    while True:
        msg = read_message(rin)
        if msg is None:
            return
        opcode, header, buffers = msg
        try:
            if opcode == OP_INIT:
                backend.initialize()
                rout.write(encode_message(opcode | 0x80, {}))
            elif opcode == OP_CAPS:
                rout.write(encode_message(opcode | 0x80, backend.descriptor().as_dict()))
            elif opcode == OP_FORWARD:
                spec = layer_from_obj(header["spec"], "$.spec")
                nb = 0
                x = buffers[nb].reshape(header["input_shape"]); nb += 1
                params = _unpack_params(spec, header["roles"], header["param_shapes"],
                                        buffers[nb : nb + len(header["roles"])])
                nb += len(header["roles"])
                switches = None
                if header.get("switch_window"):
                    switches = PoolSwitches(
                        header["switch_window"],
                        buffers[nb].reshape(header["input_shape"]),
                    )
                y = backend.forward(spec, params, x, switches=switches)
                rout.write(encode_message(
                    opcode | 0x80, {"output_shape": list(y.shape)},
                    [np.ascontiguousarray(y, dtype=np.float32).reshape(-1)],
                ))
            elif opcode == OP_FUSED:
                specs = [layer_from_obj(o, f"$.specs[{i}]") for i, o in enumerate(header["specs"])]
                nb = 0
                x = buffers[nb].reshape(header["input_shape"]); nb += 1
                plist = []
                for roles, shapes in zip(header["roles"], header["param_shapes"]):
                    plist.append(_unpack_params(None, roles, shapes, buffers[nb : nb + len(roles)]))
                    nb += len(roles)
                y = backend.forward_fused(specs, plist, x)
                rout.write(encode_message(
                    opcode | 0x80, {"output_shape": list(y.shape)},
                    [np.ascontiguousarray(y, dtype=np.float32).reshape(-1)],
                ))
            elif opcode == OP_FINI:
                backend.finalize()
                rout.write(encode_message(opcode | 0x80, {}))
                rout.flush()
                return
            else:
                rout.write(encode_message(OP_ERROR, {"error": f"unknown opcode {opcode}"}))
        except Exception as e:  # error reply keeps the pipe alive
            rout.write(encode_message(OP_ERROR, {"error": f"{type(e).__name__}: {e}"}))
        rout.flush()


class PipeBackend:
    """Harness-side client driving a worker subprocess."""

    def __init__(self, inner_name: str):
        self.inner_name = inner_name
        self._proc = None
        self._caps = None

    def _ensure(self):
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                [sys.executable, "-m", "nnbench.worker", "--backend", self.inner_name],
                stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            )
        return self._proc

    def _call(self, opcode, header, buffers=()):
        from .harness import BackendError

        proc = self._ensure()
        proc.stdin.write(encode_message(opcode, header, buffers))
        proc.stdin.flush()
        msg = read_message(proc.stdout)
        if msg is None:
            raise BackendError(f"worker {self.inner_name!r} closed the pipe")
        rop, rheader, rbufs = msg
        if rop == OP_ERROR:
            err = rheader.get("error", "")
            if "Unsupported" in err:
                from .harness import UnsupportedBenchmark

                raise UnsupportedBenchmark(err)
            raise BackendError(f"worker error: {err}")
        return rheader, rbufs

    def descriptor(self):
        from .harness import BackendDescriptor

        if self._caps is None:
            header, _ = self._call(OP_CAPS, {})
            header = dict(header)
            header["supported_kinds"] = tuple(header["supported_kinds"])
            header["name"] = f"worker:{header['name']}"
            self._caps = BackendDescriptor(**header)
        return self._caps

    def initialize(self):
        self._call(OP_INIT, {})

    def finalize(self):
        if self._proc is not None and self._proc.poll() is None:
            try:
                self._call(OP_FINI, {})
            finally:
                self._proc.wait(timeout=10)
                self._proc = None

    def forward(self, spec, params, x, switches=None):
        roles, bufs = _pack_params(spec, params)
        header = {
            "spec": layer_to_obj(spec),
            "input_shape": list(x.shape),
            "roles": roles,
            "param_shapes": [list(np.asarray(params[r]).shape) for r in roles],
            "switch_window": switches.window if switches is not None else 0,
        }
        buffers = [np.ascontiguousarray(x, dtype=np.float32).reshape(-1)] + bufs
        if switches is not None:
            buffers.append(np.ascontiguousarray(switches.idx, dtype=np.int64).reshape(-1))
        rheader, rbufs = self._call(OP_FORWARD, header, buffers)
        return rbufs[0].reshape(rheader["output_shape"])

    def forward_fused(self, specs, params, x):
        roles_list, shapes_list, bufs = [], [], []
        for p in params:
            roles = sorted(p)
            roles_list.append(roles)
            shapes_list.append([list(np.asarray(p[r]).shape) for r in roles])
            bufs.extend(np.ascontiguousarray(p[r], dtype=np.float32).reshape(-1) for r in roles)
        header = {
            "specs": [layer_to_obj(s) for s in specs],
            "input_shape": list(x.shape),
            "roles": roles_list,
            "param_shapes": shapes_list,
        }
        buffers = [np.ascontiguousarray(x, dtype=np.float32).reshape(-1)] + bufs
        rheader, rbufs = self._call(OP_FUSED, header, buffers)
        return rbufs[0].reshape(rheader["output_shape"])


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="nnbench backend worker")
    parser.add_argument("--backend", default="reference",
                        help="builtin backend to serve (reference|naive)")
    args = parser.parse_args(argv)
    from .harness import _BUILTIN_BACKENDS

    backend = _BUILTIN_BACKENDS[args.backend]()
    serve(backend, sys.stdin.buffer, sys.stdout.buffer)
    return 0


if __name__ == "__main__":
    sys.exit(main())
