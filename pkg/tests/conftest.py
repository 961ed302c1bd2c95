import io
import socket
import threading

import pytest

from sttk import mqtt
from sttk.dot11 import InformationElement, MacAddress, build_data, build_probe_request, parse_frame
from sttk.oui import OuiRegistry

# Synthetic registry: valid globally-unique prefixes, one mobile vendor,
# one non-mobile vendor.
TEST_REGISTRY = """\
# test registry
0C:10:20\tPhoneCo\t1
0C:10:21\tRouterCo\t0
00:03:93\tApple\t1
"""

MOBILE_OUI = bytes.fromhex("0c1020")
NONMOBILE_OUI = bytes.fromhex("0c1021")


@pytest.fixture
def registry() -> OuiRegistry:
    return OuiRegistry.load(io.StringIO(TEST_REGISTRY))


def probe(sa: str, ies=(), seq: int = 0):
    return parse_frame(build_probe_request(MacAddress.parse(sa), tuple(ies), seq=seq))


def data(addr1: str, addr2: str, *, to_ds=True, from_ds=False, subtype=0):
    return parse_frame(
        build_data(
            MacAddress.parse(addr1),
            MacAddress.parse(addr2),
            MacAddress.parse(addr1),
            to_ds=to_ds,
            from_ds=from_ds,
            subtype=subtype,
        )
    )


def ie(ie_id: int, value: bytes = b"") -> InformationElement:
    return InformationElement(ie_id, value)


class MiniBroker:
    """Loopback MQTT broker speaking just enough 3.1.1 for the tests."""

    def __init__(self):
        self._server = socket.create_server(("127.0.0.1", 0))
        self.port = self._server.getsockname()[1]
        self._subs: list[tuple[socket.socket, str]] = []
        self._lock = threading.Lock()
        self.published: list[tuple[str, bytes]] = []
        threading.Thread(target=self._accept_loop, daemon=True).start()

    def _accept_loop(self):
        while True:
            try:
                sock, _ = self._server.accept()
            except OSError:
                return
            threading.Thread(target=self._client_loop, args=(sock,), daemon=True).start()

    def _client_loop(self, sock: socket.socket):
        try:
            packet = mqtt.read_packet(sock)
            if packet is None or packet[0] != mqtt.CONNECT:
                return
            sock.sendall(mqtt.encode_packet(mqtt.CONNACK, 0, b"\x00\x00"))
            while True:
                packet = mqtt.read_packet(sock)
                if packet is None:
                    return
                ptype, _, body = packet
                if ptype == mqtt.PUBLISH:
                    topic, payload = mqtt._split_publish(body)
                    self.published.append((topic, payload))
                    with self._lock:
                        subs = list(self._subs)
                    for sub_sock, topic_filter in subs:
                        if mqtt.topic_matches(topic_filter, topic):
                            try:
                                sub_sock.sendall(mqtt.encode_packet(mqtt.PUBLISH, 0, body))
                            except OSError:
                                pass
                elif ptype == mqtt.SUBSCRIBE:
                    packet_id = body[:2]
                    filter_len = int.from_bytes(body[2:4], "big")
                    topic_filter = body[4 : 4 + filter_len].decode()
                    with self._lock:
                        self._subs.append((sock, topic_filter))
                    sock.sendall(mqtt.encode_packet(mqtt.SUBACK, 0, packet_id + b"\x00"))
                elif ptype == mqtt.PINGREQ:
                    sock.sendall(mqtt.encode_packet(mqtt.PINGRESP, 0, b""))
                elif ptype == mqtt.DISCONNECT:
                    return
        except (mqtt.MqttError, OSError):
            return
        finally:
            with self._lock:
                self._subs = [(s, f) for s, f in self._subs if s is not sock]
            sock.close()

    def close(self):
        self._server.close()


@pytest.fixture
def broker():
    b = MiniBroker()
    yield b
    b.close()


# Acceptance criteria results, printed one line each after the run.
ACCEPTANCE_RESULTS: list[tuple[str, str, bool]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed in sorted(ACCEPTANCE_RESULTS, key=lambda r: r[0]):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number} ({title}): {status}")
