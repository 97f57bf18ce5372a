#!/usr/bin/env python3
"""Serve a reference scorer backend over the HTTP wire protocol.

Lets you exercise the remote-backend path end to end:

    python3 scripts/run_scorer_server.py --backend constant:0.8 --port 9000
    dfdetect analyze video.avi --backend remote:http://127.0.0.1:9000
"""

import argparse
import sys

from dfdetect.pipeline import build_backend
from dfdetect.scoring import serve_scorer


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--backend", default="constant:0.5",
                        help="backend spec (constant:P | lookup:FILE)")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=9000)
    args = parser.parse_args()

    backend = build_backend(args.backend)
    server = serve_scorer(backend, host=args.host, port=args.port)
    host, port = server.server_address
    print(f"serving {backend.name!r} at http://{host}:{port}/v1/score (Ctrl-C to stop)")
    try:
        while True:
            import time

            time.sleep(3600)
    except KeyboardInterrupt:
        server.shutdown()
    return 0


if __name__ == "__main__":
    sys.exit(main())
