/**
 * CSV reading for tsgait artifacts.
 *
 * Every artifact starts with a `# schema_version=N` comment line followed by
 * a header row; readers validate both and report the offending file/column
 * by name.
 */
import { readFileSync } from "node:fs";
export class SchemaError extends Error {
}
export function readTable(path, expectedVersion = 1) {
    let text;
    try {
        text = readFileSync(path, "utf-8");
    }
    catch {
        throw new SchemaError(`cannot read CSV file: ${path}`);
    }
    const lines = text.split("\n").filter((l) => l.length > 0);
    if (lines.length < 2) {
        throw new SchemaError(`${path}: empty CSV (need schema comment + header)`);
    }
    const match = /^#\s*schema_version=(\d+)/.exec(lines[0]);
    if (!match) {
        throw new SchemaError(`${path}: missing '# schema_version=' comment line`);
    }
    const version = parseInt(match[1], 10);
    if (version !== expectedVersion) {
        throw new SchemaError(`${path}: schema_version ${version}, expected ${expectedVersion}`);
    }
    const columns = lines[1].split(",");
    const rows = lines.slice(2).map((l) => l.split(","));
    return { path, schemaVersion: version, columns, rows };
}
export function requireColumns(table, names) {
    for (const name of names) {
        if (!table.columns.includes(name)) {
            throw new SchemaError(`${table.path}: missing required column '${name}' ` +
                `(have: ${table.columns.join(", ")})`);
        }
    }
}
export function numericColumn(table, name) {
    const idx = table.columns.indexOf(name);
    if (idx < 0) {
        throw new SchemaError(`${table.path}: no column '${name}'`);
    }
    return table.rows.map((r) => parseFloat(r[idx]));
}
/** All columns whose name starts with the prefix, in header order. */
export function columnsWithPrefix(table, prefix) {
    return table.columns.filter((c) => c.startsWith(prefix));
}
export function stringColumn(table, name) {
    const idx = table.columns.indexOf(name);
    if (idx < 0) {
        throw new SchemaError(`${table.path}: no column '${name}'`);
    }
    return table.rows.map((r) => r[idx]);
}
