/**
 * Drag controller: turns a pointer path into a rate-limited stream of
 * updateHandles messages. Pointer moves are coalesced to at most
 * `rateHz` messages per second (only the latest pending position is sent);
 * release always commits the final position. A disconnect mid-drag cancels
 * the drag without sending anything further; the view then reverts to the
 * last snapshot on its own, because nothing else feeds rendered positions.
 */
import { Envelope, HandleKind, Vec, updateHandlesMsg } from "./protocol.js";

export interface DragSample {
    x: number; // model-space target
    y: number;
    t: number; // milliseconds
}

export class DragController {
    readonly session: string;
    readonly rateHz: number;
    private send: (msg: Envelope) => void;
    private active: { kind: HandleKind; id: number } | null = null;
    private lastSentT = -Infinity;
    private pending: DragSample | null = null;
    messagesSent = 0;

    constructor(session: string, send: (msg: Envelope) => void, rateHz = 60) {
        this.session = session;
        this.send = send;
        this.rateHz = rateHz;
    }

    get dragging(): boolean {
        return this.active !== null;
    }

    begin(kind: HandleKind, id: number, sample: DragSample): void {
        this.active = { kind, id };
        this.pending = null;
        this.lastSentT = -Infinity;
        this.emit(sample);
    }

    move(sample: DragSample): void {
        if (!this.active) {
            return;
        }
        const minGap = 1000 / this.rateHz;
        if (sample.t - this.lastSentT >= minGap) {
            this.emit(sample);
        } else {
            this.pending = sample; // keep only the latest
        }
    }

    /** Timer hook: send a deferred move once the rate window opens. */
    flush(now: number): void {
        if (this.active && this.pending && now - this.lastSentT >= 1000 / this.rateHz) {
            this.emit({ ...this.pending, t: now });
        }
    }

    /** Release: commit the final position (always sent, with a settle solve). */
    end(sample: DragSample): void {
        if (!this.active) {
            return;
        }
        this.emit(sample, true, true);
        this.active = null;
        this.pending = null;
    }

    /** Disconnect mid-drag: drop everything, send nothing. */
    cancel(): void {
        this.active = null;
        this.pending = null;
    }

    private emit(sample: DragSample, force = false, settle = false): void {
        if (!this.active) {
            return;
        }
        if (!force && sample.t - this.lastSentT < 1000 / this.rateHz) {
            this.pending = sample;
            return;
        }
        const target: Vec = [sample.x, sample.y];
        this.send(
            updateHandlesMsg(this.session, this.active.kind, this.active.id, target, true, settle),
        );
        this.lastSentT = sample.t;
        this.pending = null;
        this.messagesSent += 1;
    }
}
