"""Newline-delimited JSON socket endpoint of the MEC clustering service, and its client.

One JSON request per line, one JSON response line back, over TCP. Requests
from all connections are handled one at a time against the shared service.
"""

import logging
import signal
from pathlib import Path
from typing import Any

import anyio
from anyio.abc import SocketAttribute, SocketStream, TaskStatus
from anyio.streams.buffered import BufferedByteReceiveStream

from app.config import settings
from app.exceptions import InvalidInputError
from app.parsers.wire import MAX_LINE_BYTES, decode_line, encode_message
from app.services.mec_service import MecService

logger = logging.getLogger(__name__)


class MecServer:
    """Serves one ``MecService`` on a TCP port."""

    def __init__(
        self,
        service: MecService,
        *,
        bind: str | None = None,
        port: int | None = None,
        registry_file: str | Path | None = None,
    ):
        self.service = service
        self.bind = bind or settings.mec_bind
        self.port = settings.mec_port if port is None else port
        self.registry_file = registry_file or settings.mec_registry_file
        self.bound_port: int | None = None
        self._lock = anyio.Lock()
        self._registry_loaded = False

    def load_registry(self) -> int:
        """Load the registry file once; later calls are no-ops.

        Raises:
            InvalidInputError: the file is not a valid registry
            ConflictError: the file binds a VIN or pseudo-id twice
            OSError: the file cannot be read
        """
        if self._registry_loaded or not self.registry_file:
            return 0
        count = self.service.load_registry(self.registry_file)
        self._registry_loaded = True
        return count

    async def handle_request(self, line: bytes) -> bytes:
        """Answer one request line."""
        try:
            request = decode_line(line)
        except InvalidInputError as exc:
            return encode_message(
                {"status": "error", "body": {"error": exc.code, "message": str(exc)}}
            )
        async with self._lock:
            try:
                response = self.service.handle_wire(request)
            except Exception as exc:
                logger.error(f"Unhandled exception: {exc}", exc_info=True)
                response = {
                    "status": "error",
                    "body": {"error": "internal_error", "message": "An unexpected error occurred"},
                }
        return encode_message(response)

    async def handle_client(self, client: SocketStream) -> None:
        peer = client.extra(SocketAttribute.remote_address, None)
        logger.debug("Client connected: %s", peer)
        receiver = BufferedByteReceiveStream(client)
        async with client:
            while True:
                try:
                    line = await receiver.receive_until(b"\n", MAX_LINE_BYTES)
                except (anyio.IncompleteRead, anyio.EndOfStream, anyio.BrokenResourceError):
                    break
                except anyio.DelimiterNotFound:
                    await client.send(
                        encode_message(
                            {
                                "status": "error",
                                "body": {"error": "validation_error", "message": "line too long"},
                            }
                        )
                    )
                    break
                if not line.strip():
                    continue
                try:
                    await client.send(await self.handle_request(line))
                except (anyio.BrokenResourceError, anyio.ClosedResourceError):
                    break
        logger.debug("Client disconnected: %s", peer)

    async def _watch_signals(self, scope: anyio.CancelScope) -> None:
        with anyio.open_signal_receiver(signal.SIGINT, signal.SIGTERM) as signals:
            async for signum in signals:
                logger.info("Received signal %s, shutting down", signal.Signals(signum).name)
                scope.cancel()
                return

    async def serve(
        self,
        *,
        handle_signals: bool = True,
        task_status: TaskStatus[int] = anyio.TASK_STATUS_IGNORED,
    ) -> None:
        """Serve until cancelled or interrupted.

        Raises:
            OSError: the address cannot be bound
        """
        self.load_registry()

        listener = await anyio.create_tcp_listener(local_host=self.bind, local_port=self.port)
        self.bound_port = listener.extra(SocketAttribute.local_port)
        logger.info("MEC endpoint listening on %s:%d", self.bind, self.bound_port)
        try:
            async with anyio.create_task_group() as tg:
                if handle_signals:
                    tg.start_soon(self._watch_signals, tg.cancel_scope)
                task_status.started(self.bound_port)
                await listener.serve(self.handle_client, task_group=tg)
        finally:
            with anyio.CancelScope(shield=True):
                await listener.aclose()
            if self.registry_file:
                self.service.save_registry(self.registry_file)
            logger.info("MEC endpoint stopped")


class MecClient:
    """Line-oriented client for the MEC socket endpoint."""

    def __init__(self, host: str | None = None, port: int | None = None):
        self.host = host or settings.mec_bind
        self.port = settings.mec_port if port is None else port
        self._stream: SocketStream | None = None
        self._receiver: BufferedByteReceiveStream | None = None

    async def __aenter__(self) -> "MecClient":
        self._stream = await anyio.connect_tcp(self.host, self.port)
        self._receiver = BufferedByteReceiveStream(self._stream)
        return self

    async def __aexit__(self, *exc_info) -> None:
        if self._stream is not None:
            await self._stream.aclose()
        self._stream = None
        self._receiver = None

    async def request_raw(self, request: dict[str, Any]) -> bytes:
        """Send one request and return the raw response line, newline included."""
        if self._stream is None:
            raise RuntimeError("client is not connected")
        await self._stream.send(encode_message(request))
        return await self._receiver.receive_until(b"\n", MAX_LINE_BYTES) + b"\n"

    async def request(self, request: dict[str, Any]) -> dict[str, Any]:
        return decode_line(await self.request_raw(request))


def run_server(server: MecServer) -> None:
    """Blocking entry point used by ``secure-cluster serve``."""
    anyio.run(server.serve)
