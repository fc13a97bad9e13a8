"""Minimal WebSocket (RFC 6455) framing over plain sockets.

Covers what the bridge needs: the HTTP upgrade handshake, unfragmented text
frames up to 64-bit lengths, client masking, and ping/pong/close control
frames.  Both the server side and a small client (used by tests and tools)
live here so the two ends share one codec.
"""

import base64
import hashlib
import os
import socket
import struct

GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

OP_TEXT = 0x1
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA


class SocketClosed(ConnectionError):
    pass


def accept_key(client_key):
    digest = hashlib.sha1((client_key + GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


def read_http_head(rfile):
    """Request line + headers dict (lowercased keys) from a file-like socket."""
    request_line = rfile.readline()
    if not request_line:
        raise SocketClosed("connection closed during HTTP head")
    headers = {}
    while True:
        line = rfile.readline()
        if not line or line in (b"\r\n", b"\n"):
            break
        name, _, value = line.decode("latin-1").partition(":")
        headers[name.strip().lower()] = value.strip()
    return request_line.decode("latin-1").strip(), headers


def is_upgrade(headers):
    return (
        "websocket" in headers.get("upgrade", "").lower()
        and "sec-websocket-key" in headers
    )


def handshake_response(headers):
    key = accept_key(headers["sec-websocket-key"])
    return (
        "HTTP/1.1 101 Switching Protocols\r\n"
        "Upgrade: websocket\r\n"
        "Connection: Upgrade\r\n"
        f"Sec-WebSocket-Accept: {key}\r\n\r\n"
    ).encode("ascii")


def _read_exact(rfile, n):
    buf = b""
    while len(buf) < n:
        chunk = rfile.read(n - len(buf))
        if not chunk:
            raise SocketClosed("connection closed mid-frame")
        buf += chunk
    return buf


def read_frame(rfile):
    """One frame as (opcode, payload bytes); unmasks client frames."""
    head = _read_exact(rfile, 2)
    opcode = head[0] & 0x0F
    masked = bool(head[1] & 0x80)
    length = head[1] & 0x7F
    if length == 126:
        length = struct.unpack(">H", _read_exact(rfile, 2))[0]
    elif length == 127:
        length = struct.unpack(">Q", _read_exact(rfile, 8))[0]
    mask = _read_exact(rfile, 4) if masked else None
    payload = _read_exact(rfile, length)
    if mask:
        payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
    return opcode, payload


def encode_frame(payload, opcode=OP_TEXT, mask=False):
    if isinstance(payload, str):
        payload = payload.encode("utf-8")
    head = bytes([0x80 | opcode])
    n = len(payload)
    mask_bit = 0x80 if mask else 0
    if n < 126:
        head += bytes([mask_bit | n])
    elif n < 1 << 16:
        head += bytes([mask_bit | 126]) + struct.pack(">H", n)
    else:
        head += bytes([mask_bit | 127]) + struct.pack(">Q", n)
    if mask:
        key = os.urandom(4)
        payload = key + bytes(b ^ key[i % 4] for i, b in enumerate(payload))
    return head + payload


class WsClient:
    """Tiny blocking WebSocket client for tests and tooling."""

    def __init__(self, host, port, path="/", timeout=10.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        self.rfile = self.sock.makefile("rb")
        key = base64.b64encode(os.urandom(16)).decode("ascii")
        self.sock.sendall(
            (
                f"GET {path} HTTP/1.1\r\n"
                f"Host: {host}:{port}\r\n"
                "Upgrade: websocket\r\n"
                "Connection: Upgrade\r\n"
                f"Sec-WebSocket-Key: {key}\r\n"
                "Sec-WebSocket-Version: 13\r\n\r\n"
            ).encode("ascii")
        )
        status, headers = read_http_head(self.rfile)
        if "101" not in status:
            raise ConnectionError(f"handshake refused: {status}")
        expect = accept_key(key)
        if headers.get("sec-websocket-accept") != expect:
            raise ConnectionError("bad Sec-WebSocket-Accept")

    def send_text(self, text):
        self.sock.sendall(encode_frame(text, OP_TEXT, mask=True))

    def recv_text(self):
        """Next text frame payload; answers pings transparently."""
        while True:
            opcode, payload = read_frame(self.rfile)
            if opcode == OP_TEXT:
                return payload.decode("utf-8")
            if opcode == OP_PING:
                self.sock.sendall(encode_frame(payload, OP_PONG, mask=True))
                continue
            if opcode == OP_CLOSE:
                raise SocketClosed("server closed the connection")

    def close(self):
        try:
            self.sock.sendall(encode_frame(b"", OP_CLOSE, mask=True))
        except OSError:
            pass
        try:
            self.rfile.close()
        finally:
            self.sock.close()
