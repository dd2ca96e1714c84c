"""Classic libpcap reader (Ethernet link type, IPv4/IPv6, TCP/UDP).

Layout: 24-byte global header, then per record a 16-byte header
(ts_sec, ts_frac, incl_len, orig_len) followed by ``incl_len`` bytes.
"""

from __future__ import annotations

import ipaddress
import logging
import struct
from pathlib import Path

from agentfp.errors import MalformedHeader, TruncatedPacket, UnsupportedLinkType
from agentfp.ingest.traces import IngestConfig, PacketRecord

log = logging.getLogger(__name__)

# magic as read little-endian -> (byte order, timestamp fraction divisor)
_MAGICS = {
    0xA1B2C3D4: ("<", 1e6),
    0xD4C3B2A1: (">", 1e6),
    0xA1B23C4D: ("<", 1e9),
    0x4D3CB2A1: (">", 1e9),
}
GLOBAL_HEADER_LEN = 24
RECORD_HEADER_LEN = 16
LINKTYPE_ETHERNET = 1

ETH_IPV4 = 0x0800
ETH_IPV6 = 0x86DD
ETH_VLAN = (0x8100, 0x88A8)
PROTO_TCP = 6
PROTO_UDP = 17
_IPV6_EXT = (0, 43, 60)  # hop-by-hop, routing, destination options


def iter_records(data: bytes):
    """Yield ``(timestamp, frame_bytes)`` for every record in a capture."""
    if len(data) < GLOBAL_HEADER_LEN:
        raise MalformedHeader(f"global header truncated ({len(data)} < {GLOBAL_HEADER_LEN} bytes)")
    (magic,) = struct.unpack_from("<I", data, 0)
    if magic not in _MAGICS:
        raise MalformedHeader(f"bad magic number 0x{magic:08x}")
    order, frac = _MAGICS[magic]
    _vmaj, _vmin, _zone, _sigfigs, _snaplen, linktype = struct.unpack_from(order + "HHiIII", data, 4)
    if linktype != LINKTYPE_ETHERNET:
        raise UnsupportedLinkType(f"link type {linktype} (only Ethernet=1 is supported)")

    rec_fmt = order + "IIII"
    off = GLOBAL_HEADER_LEN
    while off < len(data):
        if off + RECORD_HEADER_LEN > len(data):
            raise TruncatedPacket(f"record header at offset {off} exceeds remaining bytes")
        ts_sec, ts_frac, incl_len, _orig_len = struct.unpack_from(rec_fmt, data, off)
        off += RECORD_HEADER_LEN
        if off + incl_len > len(data):
            raise TruncatedPacket(f"record at offset {off} claims {incl_len} bytes, {len(data) - off} left")
        yield ts_sec + ts_frac / frac, data[off:off + incl_len]
        off += incl_len


def _transport(frame: bytes):
    """Decode an Ethernet frame to (proto, src, sport, dst, dport, payload_len, ip_len) or None."""
    if len(frame) < 14:
        return None
    (ethertype,) = struct.unpack_from("!H", frame, 12)
    off = 14
    while ethertype in ETH_VLAN and len(frame) >= off + 4:
        (ethertype,) = struct.unpack_from("!H", frame, off + 2)
        off += 4

    if ethertype == ETH_IPV4:
        if len(frame) < off + 20:
            return None
        ver_ihl, _tos, total_len, _ident, frag, _ttl, proto = struct.unpack_from("!BBHHHBB", frame, off)
        ihl = (ver_ihl & 0x0F) * 4
        if ver_ihl >> 4 != 4 or ihl < 20:
            return None
        if frag & 0x1FFF:  # non-first fragment carries no transport header
            return None
        src = ipaddress.IPv4Address(frame[off + 12:off + 16])
        dst = ipaddress.IPv4Address(frame[off + 16:off + 20])
        l4 = off + ihl
        l4_len = total_len - ihl
        ip_len = total_len
    elif ethertype == ETH_IPV6:
        if len(frame) < off + 40:
            return None
        payload_len, = struct.unpack_from("!H", frame, off + 4)
        proto = frame[off + 6]
        src = ipaddress.IPv6Address(frame[off + 8:off + 24])
        dst = ipaddress.IPv6Address(frame[off + 24:off + 40])
        l4 = off + 40
        l4_len = payload_len
        while proto in _IPV6_EXT:
            if len(frame) < l4 + 2:
                return None
            proto, ext_len = frame[l4], (frame[l4 + 1] + 1) * 8
            l4 += ext_len
            l4_len -= ext_len
        ip_len = payload_len + 40
    else:
        return None

    if proto == PROTO_TCP:
        if len(frame) < l4 + 13:
            return None
        sport, dport = struct.unpack_from("!HH", frame, l4)
        data_off = (frame[l4 + 12] >> 4) * 4
        payload = l4_len - data_off
        name = "tcp"
    elif proto == PROTO_UDP:
        if len(frame) < l4 + 8:
            return None
        sport, dport, udp_len = struct.unpack_from("!HHH", frame, l4)
        payload = udp_len - 8
        name = "udp"
    else:
        return None
    return name, str(src), sport, str(dst), dport, max(payload, 0), ip_len


def parse_pcap(data: bytes, cfg: IngestConfig) -> list[PacketRecord]:
    """Extract client-relative packet records from a classic pcap capture.

    Timestamps are absolute capture times; ``assemble_traces`` re-bases them.
    """
    out = []
    skipped = 0
    for ts, frame in iter_records(data):
        decoded = _transport(frame)
        if decoded is None:
            skipped += 1
            continue
        proto, src, sport, dst, dport, payload, ip_len = decoded
        if payload < cfg.min_payload:
            continue
        if cfg.is_client(src):
            d, key = 1, f"{proto}|{src}|{sport}|{dst}|{dport}"
        elif cfg.is_client(dst):
            d, key = -1, f"{proto}|{dst}|{dport}|{src}|{sport}"
        else:
            continue
        size = payload if cfg.size_basis == "payload" else ip_len
        out.append(PacketRecord(ts, d, size, key))
    if skipped:
        log.debug("skipped %d non-IP or non-TCP/UDP frames", skipped)
    return out


def read_pcap(path, cfg: IngestConfig) -> list[PacketRecord]:
    return parse_pcap(Path(path).read_bytes(), cfg)
