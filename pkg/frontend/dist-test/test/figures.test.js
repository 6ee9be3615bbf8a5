import assert from "node:assert/strict";
import { mkdtempSync, readFileSync, writeFileSync, existsSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { test } from "node:test";
import { inflateSync } from "node:zlib";
import { readTable, SchemaError } from "../src/csv.js";
import { seedCurve, referenceProfile } from "../src/figures.js";
import { renderSpec } from "../src/main.js";
const dir = mkdtempSync(join(tmpdir(), "tsgait-plots-"));
function fixture(name, text) {
    const path = join(dir, name);
    writeFileSync(path, text);
    return path;
}
const CURVE = fixture("curve.csv", `# schema_version=1
iteration,reward_seed_1,reward_seed_2,reward_seed_3
1,10.0,12.0,8.0
2,11.0,13.0,9.5
3,12.5,12.0,11.0
4,14.0,15.5,12.5
`);
const SPEED = fixture("speed.csv", `# schema_version=1
speed_cmd,achieved_mean,achieved_std,falls,steps
0.0,0.02,0.01,0,320
0.5,0.47,0.04,0,320
1.0,0.93,0.06,1,320
`);
const GRF = fixture("grf.csv", `# schema_version=1
bin_center,vertical_mean,forward_mean,samples
0.125,120.0,-20.0,14
0.375,420.0,-5.0,18
0.625,400.0,8.0,17
0.875,150.0,22.0,12
`);
const REFDUMP = fixture("refs.csv", `# schema_version=1
phase,xref_l_x,xref_l_y,xref_l_z,fref_l_x,fref_l_y,fref_l_z,phi_l,xref_r_x,xref_r_y,xref_r_z,fref_r_x,fref_r_y,fref_r_z,phi_r,base_xvel_ref,base_zvel_ref,base_zpos_ref
0.0,0.1,0.05,-0.95,0.0,0.0,0.0,0.0,0.0,-0.05,-0.95,0.0,0.0,0.0,1.0,0.5,0.0,0.95
0.1,0.08,0.05,-0.95,-12.0,1.0,180.0,1.0,0.0,-0.05,-0.8,0.0,0.0,0.0,0.0,0.5,0.0,0.95
0.2,0.05,0.05,-0.95,-6.0,2.0,420.0,1.0,0.0,-0.05,-0.8,0.0,0.0,0.0,0.0,0.5,0.0,0.95
0.3,0.0,0.05,-0.95,4.0,1.0,460.0,1.0,0.0,-0.05,-0.8,0.0,0.0,0.0,0.0,0.5,0.0,0.95
0.4,-0.05,0.05,-0.95,10.0,0.0,200.0,1.0,0.0,-0.05,-0.8,0.0,0.0,0.0,0.0,0.5,0.0,0.95
0.5,-0.08,0.05,-0.95,0.0,0.0,0.0,0.0,0.0,-0.05,-0.95,0.0,0.0,0.0,1.0,0.5,0.0,0.95
`);
const SCATTER = fixture("scatter.csv", `# schema_version=1
mode,action_space,seed,episode,step,foot,x,y,z,terminated
episode,task,1,0,0,left,0.05,0.05,-0.93,0
episode,task,1,0,0,right,0.02,-0.05,-0.95,0
episode,task,1,0,1,left,0.08,0.06,-0.90,0
episode,task,1,0,1,right,-0.03,-0.04,-0.94,0
episode,task,1,1,0,left,0.01,0.05,-0.96,1
episode,task,1,1,0,right,0.00,-0.06,-0.92,1
`);
test("seed curve band covers every per-seed column", () => {
    const curve = seedCurve(readTable(CURVE));
    assert.equal(curve.perSeed.length, 3);
    for (let i = 0; i < curve.iterations.length; i++) {
        for (const col of curve.perSeed) {
            assert.ok(curve.lo[i] <= col[i] && col[i] <= curve.hi[i], `band misses seed value at ${i}`);
        }
        assert.ok(curve.lo[i] <= curve.mean[i] && curve.mean[i] <= curve.hi[i]);
    }
});
test("all four figure kinds render SVG without error", () => {
    const outputs = [
        renderSpec({ kind: "learning_curve", inputs: [CURVE], labels: ["task"],
            output: join(dir, "lc.svg") }),
        renderSpec({ kind: "speed_tracking", inputs: [SPEED], labels: ["task"],
            output: join(dir, "st.svg") }),
        renderSpec({ kind: "grf_profile", inputs: [GRF, REFDUMP],
            output: join(dir, "grf.svg") }),
        renderSpec({ kind: "foot_scatter", inputs: [SCATTER],
            title: "episode/task", output: join(dir, "fs.svg") }),
    ];
    for (const written of outputs) {
        for (const path of written) {
            assert.ok(existsSync(path));
            const text = readFileSync(path, "utf-8");
            assert.ok(text.startsWith("<svg"));
            assert.ok(text.trimEnd().endsWith("</svg>"));
        }
    }
});
test("rendering is byte-identical across runs", () => {
    for (const kind of ["learning_curve", "speed_tracking"]) {
        const inputs = kind === "learning_curve" ? [CURVE] : [SPEED];
        const a = join(dir, `${kind}-a.svg`);
        const b = join(dir, `${kind}-b.svg`);
        renderSpec({ kind, inputs, output: a });
        renderSpec({ kind, inputs, output: b });
        assert.deepEqual(readFileSync(a), readFileSync(b));
    }
});
test("png output is a valid PNG with the right dimensions", () => {
    renderSpec({ kind: "speed_tracking", inputs: [SPEED],
        output: join(dir, "p.svg"), png: true });
    const png = readFileSync(join(dir, "p.png"));
    assert.deepEqual([...png.subarray(0, 8)], [0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);
    assert.equal(png.readUInt32BE(16), 480); // IHDR width
    assert.equal(png.readUInt32BE(20), 320); // IHDR height
    // IDAT payload inflates to (width*4+1)*height filtered bytes
    const idatStart = png.indexOf("IDAT") + 4;
    const idatLen = png.readUInt32BE(png.indexOf("IDAT") - 4);
    const raw = inflateSync(png.subarray(idatStart, idatStart + idatLen));
    assert.equal(raw.length, (480 * 4 + 1) * 320);
});
test("reference profile extracts the active stance window", () => {
    const ref = referenceProfile(readTable(REFDUMP));
    assert.equal(ref.s[0], 0);
    assert.equal(ref.s[ref.s.length - 1], 1);
    assert.equal(Math.max(...ref.vertical), 460.0);
});
test("empty CSV raises a schema error and writes nothing", () => {
    const empty = fixture("empty.csv", "");
    const out = join(dir, "never.svg");
    assert.throws(() => renderSpec({ kind: "learning_curve", inputs: [empty], output: out }), SchemaError);
    assert.ok(!existsSync(out));
});
test("schema version mismatch names the file", () => {
    const bad = fixture("bad.csv", "# schema_version=9\niteration\n1\n");
    assert.throws(() => renderSpec({ kind: "learning_curve", inputs: [bad],
        output: join(dir, "x.svg") }), /schema_version 9/);
});
test("missing columns name the offending column", () => {
    const bad = fixture("cols.csv", "# schema_version=1\nspeed_cmd,achieved_mean\n0,0\n");
    assert.throws(() => renderSpec({ kind: "speed_tracking", inputs: [bad],
        output: join(dir, "y.svg") }), /achieved_std/);
});
