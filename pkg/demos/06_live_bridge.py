"""Spin up the streaming bridge in-process, drive it with the built-in
WebSocket client the way the browser sandbox does, and print what comes back.

For the real interactive sandbox: build the frontend (see frontend/README)
and run `telemap serve --dir <artifacts> --web frontend/dist`, then open
http://127.0.0.1:8765/ in a browser.
"""

import json
import tempfile
import time
from pathlib import Path

import numpy as np

from telemap import bundled_scenario, fit, save_scenario
from telemap.bridge import BridgeServer
from telemap.wsproto import WsClient

root = Path(tempfile.mkdtemp())
corr = bundled_scenario("toy2d")
save_scenario(corr, root / "toy2d.scenario.json")
fit(corr, n_layers=60).save(root / "toy2d.iter.map.json")

server = BridgeServer(
    addr="127.0.0.1:0",
    tick_hz=60.0,
    scenarios={"toy2d": str(root / "toy2d.scenario.json")},
    maps={("toy2d", "iter"): str(root / "toy2d.iter.map.json")},
)
server.start()
print(f"bridge on 127.0.0.1:{server.port}")

client = WsClient("127.0.0.1", server.port)
client.send_text(json.dumps({"type": "bind", "scenario": "toy2d", "backend": "iter"}))
snapshot = json.loads(client.recv_text())
print(f"snapshot: {len(snapshot['objects_local'])} local objects, bounds {snapshot['bounds']['local']}")

# sweep the cursor across the workspace like a dragging pointer
for seq, u in enumerate(np.linspace(0, 1, 20)):
    pose = {"position": [0.15 + 0.6 * u, 0.3 + 0.45 * u, 0.0], "quaternion": [1, 0, 0, 0]}
    client.send_text(json.dumps({"type": "pose", "seq": seq, "t": seq / 60, "pose": pose}))
    frame = json.loads(client.recv_text())
    if seq % 5 == 0:
        p = np.round(frame["pose"]["position"], 4)
        print(f"  seq {seq:2d}: mapped -> {p}, detJ = {frame['detJ']:.4f}")
    time.sleep(1 / 60)

client.close()
server.stop()
print("done")
