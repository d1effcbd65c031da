/**
 * WebSocket wrapper: one session per channel, messages dispatched in arrival
 * order (the transport already guarantees ordering; we only decode and fan
 * out). Exposes imperative send plus status callbacks.
 */
import { Envelope, encodeMessage, parseMessage } from "./protocol.js";

export interface ConnectionHandlers {
    onMessage: (msg: Envelope) => void;
    onOpen?: () => void;
    onClose?: () => void;
}

export class Connection {
    private ws: WebSocket;
    private handlers: ConnectionHandlers;

    constructor(url: string, handlers: ConnectionHandlers) {
        this.handlers = handlers;
        this.ws = new WebSocket(url);
        this.ws.onmessage = (ev) => this.handlers.onMessage(parseMessage(String(ev.data)));
        this.ws.onopen = () => this.handlers.onOpen?.();
        this.ws.onclose = () => this.handlers.onClose?.();
        this.ws.onerror = () => this.handlers.onClose?.();
    }

    get open(): boolean {
        return this.ws.readyState === WebSocket.OPEN;
    }

    send(msg: Envelope): void {
        if (!this.open) {
            throw new Error("connection is not open");
        }
        this.ws.send(encodeMessage(msg));
    }

    close(): void {
        this.ws.close();
    }
}
