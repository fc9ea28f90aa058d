"""duplex-chat: a terminal client for the /duplex socket.

Type while the assistant is talking; your words go out immediately and the
server handles the barge-in. Output chunks print as they stream; idle ticks
stay quiet.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys

import websockets

from .schemas import CLIENT_TO_SERVER, WireMessage


def open_frame(tick_seconds: float | None, token: str | None) -> dict:
    frame = WireMessage(direction=CLIENT_TO_SERVER, type="open", token=token)
    payload = frame.model_dump(exclude_none=True)
    if tick_seconds is not None:
        payload["config"] = {"tick_seconds": tick_seconds}
    return payload


def input_frame(session_id: str, text: str) -> dict:
    return WireMessage(
        direction=CLIENT_TO_SERVER,
        type="input_chunk",
        session_id=session_id,
        text=text,
    ).model_dump(exclude_none=True)


def close_frame(session_id: str) -> dict:
    return WireMessage(
        direction=CLIENT_TO_SERVER, type="close", session_id=session_id
    ).model_dump(exclude_none=True)


def render_frame(frame: dict) -> str | None:
    """What to print for one server frame; None prints nothing."""
    kind = frame.get("type")
    if kind == "output_chunk":
        text = frame.get("text", "")
        return text + ("\n" if frame.get("terminal") else " ")
    if kind == "error":
        return f"[error: {frame.get('error')}]\n"
    if kind == "session_closed":
        return "[session closed]\n"
    return None


async def _reader(ws, stop: asyncio.Event, until_terminal: bool = False) -> None:
    try:
        async for raw in ws:
            frame = json.loads(raw)
            piece = render_frame(frame)
            if piece is not None:
                sys.stdout.write(piece)
                sys.stdout.flush()
            if frame.get("type") == "session_closed":
                break
            if until_terminal and frame.get("type") == "output_chunk" and frame.get("terminal"):
                break
    finally:
        stop.set()


async def run_client(url: str, tick: float | None, token: str | None, send: str | None) -> int:
    async with websockets.connect(url) as ws:
        await ws.send(json.dumps(open_frame(tick, token)))
        opened = json.loads(await ws.recv())
        if opened.get("type") != "open":
            print(f"server refused: {opened.get('error')}", file=sys.stderr)
            return 1
        session_id = opened["session_id"]
        if send is None:
            print(f"[session {session_id}] type and press enter; ctrl-d to leave")
        stop = asyncio.Event()
        reader = asyncio.create_task(_reader(ws, stop, until_terminal=send is not None))
        loop = asyncio.get_running_loop()
        try:
            if send is not None:
                await ws.send(json.dumps(input_frame(session_id, send)))
                await stop.wait()
                await ws.send(json.dumps(close_frame(session_id)))
            else:
                while not stop.is_set():
                    line = await loop.run_in_executor(None, sys.stdin.readline)
                    if not line:
                        break
                    line = line.strip()
                    if line:
                        await ws.send(json.dumps(input_frame(session_id, line)))
                if not stop.is_set():
                    await ws.send(json.dumps(close_frame(session_id)))
                    await asyncio.wait_for(stop.wait(), timeout=5)
        finally:
            reader.cancel()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="duplex-chat", description="Talk to a duplex chat server."
    )
    parser.add_argument("--url", default="ws://127.0.0.1:8420/duplex")
    parser.add_argument("--tick", type=float, default=None, help="request a tick length")
    parser.add_argument("--token", default=None)
    parser.add_argument(
        "--send", default=None, help="send one message, print until the response ends"
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return asyncio.run(run_client(args.url, args.tick, args.token, args.send))
    except KeyboardInterrupt:
        return 130
    except OSError as exc:
        print(f"connection failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
