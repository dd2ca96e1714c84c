"""Hand-assembled classic pcap captures for parser tests.

Everything is packed field by field from the published header layouts so the
parser under test never helps build its own fixtures.
"""

import ipaddress
import struct

CLIENT = "10.0.0.2"
PROVIDER = "104.18.32.47"
THIRD_PARTY = "151.101.1.69"
CLIENT6 = "2001:db8::2"
PROVIDER6 = "2606:4700::6810:2f"


def global_header(order="<", magic=0xA1B2C3D4, linktype=1, snaplen=65535):
    return struct.pack(order + "IHHiIII", magic, 2, 4, 0, 0, snaplen, linktype)


def record(frame, ts, order="<", frac_div=1_000_000):
    sec = int(ts)
    frac = int(round((ts - sec) * frac_div))
    return struct.pack(order + "IIII", sec, frac, len(frame), len(frame)) + frame


def ethernet(payload, ethertype=0x0800, vlan=None):
    head = b"\x00\x11\x22\x33\x44\x55" + b"\x66\x77\x88\x99\xaa\xbb"
    if vlan is not None:
        head += struct.pack("!HH", 0x8100, vlan)
    return head + struct.pack("!H", ethertype) + payload


def tcp(sport, dport, payload_len, flags=0x18):
    header = struct.pack("!HHIIBBHHH", sport, dport, 1, 1, 5 << 4, flags, 65535, 0, 0)
    return header + b"\xab" * payload_len


def udp(sport, dport, payload_len):
    return struct.pack("!HHHH", sport, dport, 8 + payload_len, 0) + b"\xcd" * payload_len


def ipv4(src, dst, l4, proto=6, frag=0):
    total = 20 + len(l4)
    header = struct.pack("!BBHHHBBH4s4s", 0x45, 0, total, 7, frag, 64, proto, 0,
                         ipaddress.IPv4Address(src).packed, ipaddress.IPv4Address(dst).packed)
    return header + l4


def ipv6(src, dst, l4, proto=6):
    header = struct.pack("!IHBB16s16s", 6 << 28, len(l4), proto, 64,
                         ipaddress.IPv6Address(src).packed, ipaddress.IPv6Address(dst).packed)
    return header + l4


def tcp4_frame(src, dst, payload_len, sport=50000, dport=443, vlan=None, flags=0x18):
    return ethernet(ipv4(src, dst, tcp(sport, dport, payload_len, flags)), vlan=vlan)


def capture(frames_with_ts, order="<", magic=0xA1B2C3D4, frac_div=1_000_000, linktype=1):
    out = global_header(order, magic, linktype)
    for ts, frame in frames_with_ts:
        out += record(frame, ts, order, frac_div)
    return out
