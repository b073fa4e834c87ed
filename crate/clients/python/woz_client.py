#!/usr/bin/env python3
"""Minimal prototype client: prints each prediction as a check or cross mark.

Connects to the service's prototype port, reads newline-delimited JSON frames
and acknowledges every prediction.

    python3 woz_client.py --host 127.0.0.1 --port 7878
"""

import argparse
import json
import socket


def render(frame):
    kind = frame["type"]
    if kind == "session_start":
        return f"session {frame['session_id']} started (target {frame['target_accuracy']}%)"
    if kind == "session_end":
        return f"session {frame['session_id']} ended at {frame['final_accuracy']:.2f}%"
    if kind == "prediction":
        label = frame["predicted_label"] or "(no recognition)"
        confidence = frame["confidence"]
        conf = "" if confidence is None else f" {confidence}%"
        mark = {True: "✓", False: "✗"}.get(frame.get("correct"), "?")
        return f"#{frame['seq']} {mark} {label}{conf}"
    return f"unhandled frame {frame}"


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=7878)
    args = parser.parse_args()

    with socket.create_connection((args.host, args.port)) as sock:
        reader = sock.makefile("r", encoding="utf-8", newline="\n")
        for line in reader:
            frame = json.loads(line)
            print(render(frame), flush=True)
            if frame["type"] == "prediction":
                ack = json.dumps({"type": "ack", "seq": frame["seq"]}) + "\n"
                sock.sendall(ack.encode("utf-8"))


if __name__ == "__main__":
    main()
