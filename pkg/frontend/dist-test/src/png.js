/**
 * Minimal dependency-free PNG writer plus a tiny rasterizer.
 *
 * The raster path re-draws the figure primitives (the same polylines and
 * dots the SVG uses) onto an RGBA byte canvas and encodes it with
 * node:zlib.  Deterministic for identical inputs.
 */
import { deflateSync } from "node:zlib";
export class Raster {
    width;
    height;
    data;
    constructor(width, height) {
        this.width = width;
        this.height = height;
        this.data = new Uint8Array(width * height * 4).fill(255);
    }
    set(x, y, rgb) {
        const xi = Math.round(x);
        const yi = Math.round(y);
        if (xi < 0 || yi < 0 || xi >= this.width || yi >= this.height)
            return;
        const o = (yi * this.width + xi) * 4;
        this.data[o] = rgb[0];
        this.data[o + 1] = rgb[1];
        this.data[o + 2] = rgb[2];
        this.data[o + 3] = 255;
    }
    line(x0, y0, x1, y1, rgb) {
        let xa = Math.round(x0);
        let ya = Math.round(y0);
        const xb = Math.round(x1);
        const yb = Math.round(y1);
        const dx = Math.abs(xb - xa);
        const dy = -Math.abs(yb - ya);
        const sx = xa < xb ? 1 : -1;
        const sy = ya < yb ? 1 : -1;
        let err = dx + dy;
        for (;;) {
            this.set(xa, ya, rgb);
            if (xa === xb && ya === yb)
                break;
            const e2 = 2 * err;
            if (e2 >= dy) {
                err += dy;
                xa += sx;
            }
            if (e2 <= dx) {
                err += dx;
                ya += sy;
            }
        }
    }
    disc(x, y, r, rgb) {
        for (let dy = -r; dy <= r; dy++) {
            for (let dx = -r; dx <= r; dx++) {
                if (dx * dx + dy * dy <= r * r)
                    this.set(x + dx, y + dy, rgb);
            }
        }
    }
}
const CRC_TABLE = (() => {
    const table = new Uint32Array(256);
    for (let n = 0; n < 256; n++) {
        let c = n;
        for (let k = 0; k < 8; k++) {
            c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
        }
        table[n] = c >>> 0;
    }
    return table;
})();
function crc32(buf) {
    let c = 0xffffffff;
    for (const byte of buf) {
        c = CRC_TABLE[(c ^ byte) & 0xff] ^ (c >>> 8);
    }
    return (c ^ 0xffffffff) >>> 0;
}
function chunk(type, body) {
    const head = Buffer.alloc(8);
    head.writeUInt32BE(body.length, 0);
    head.write(type, 4, "ascii");
    const crcInput = Buffer.concat([head.subarray(4), body]);
    const tail = Buffer.alloc(4);
    tail.writeUInt32BE(crc32(crcInput), 0);
    return Buffer.concat([head, body, tail]);
}
export function encodePng(raster) {
    const { width, height, data } = raster;
    const ihdr = Buffer.alloc(13);
    ihdr.writeUInt32BE(width, 0);
    ihdr.writeUInt32BE(height, 4);
    ihdr[8] = 8; // bit depth
    ihdr[9] = 6; // RGBA
    const stride = width * 4;
    const filtered = Buffer.alloc((stride + 1) * height);
    for (let y = 0; y < height; y++) {
        filtered[y * (stride + 1)] = 0; // filter: none
        filtered.set(data.subarray(y * stride, (y + 1) * stride), y * (stride + 1) + 1);
    }
    return Buffer.concat([
        Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]),
        chunk("IHDR", ihdr),
        chunk("IDAT", deflateSync(filtered, { level: 9 })),
        chunk("IEND", new Uint8Array(0)),
    ]);
}
export function hexToRgb(hex) {
    return [
        parseInt(hex.slice(1, 3), 16),
        parseInt(hex.slice(3, 5), 16),
        parseInt(hex.slice(5, 7), 16),
    ];
}
