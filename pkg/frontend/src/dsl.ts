/**
 * Schema-driven DSL validation and autocomplete.
 *
 * All grammar knowledge comes from the served schema document, so the editor
 * can never accept a program the service would reject.
 */

import { ProgramJson, SchemaDoc } from "./types.js";

export interface TokenError {
  tagIndex: number;
  token: string;
  message: string;
}

export interface ValidationResult {
  ok: boolean;
  program: ProgramJson | null;
  errors: TokenError[];
}

export class DslGrammar {
  private readonly keysByLength: string[];

  constructor(readonly schema: SchemaDoc) {
    const keys = new Set<string>();
    for (const prim of schema.primitives) {
      for (const mod of prim.modifiers) keys.add(mod.key);
    }
    this.keysByLength = [...keys].sort((a, b) => b.length - a.length);
  }

  primitives(): string[] {
    return this.schema.primitives.map((p) => p.name);
  }

  modifiers(primitive: string) {
    return this.schema.primitives.find((p) => p.name === primitive)?.modifiers ?? [];
  }

  private matchKey(token: string): { key: string; value: string } | null {
    for (const key of this.keysByLength) {
      if (token.startsWith(key + "_")) {
        return { key, value: token.slice(key.length + 1) };
      }
    }
    return null;
  }

  /** Validate DSL source; reports every offending token with its tag index. */
  validate(text: string, role: "object" | "camera"): ValidationResult {
    const errors: TokenError[] = [];
    const trimmed = text.trim();
    if (!trimmed) {
      return { ok: false, program: null, errors: [{ tagIndex: 0, token: "", message: "empty program" }] };
    }
    const chunks = trimmed.split(this.schema.tag_delimiter);
    if (chunks.length > this.schema.max_tags) {
      errors.push({
        tagIndex: this.schema.max_tags,
        token: "|",
        message: `at most ${this.schema.max_tags} tags`,
      });
    }
    const roleInfo = this.schema.roles[role];
    const tags: ProgramJson["tags"] = [];
    chunks.slice(0, this.schema.max_tags).forEach((chunk, tagIndex) => {
      const tokens = chunk.trim().split(/\s+/).filter(Boolean);
      if (!tokens.length) {
        errors.push({ tagIndex, token: "", message: "empty tag" });
        return;
      }
      const primitive = tokens[0];
      if (!this.primitives().includes(primitive)) {
        errors.push({ tagIndex, token: primitive, message: `unknown primitive "${primitive}"` });
        return;
      }
      if (!roleInfo.primitives.includes(primitive)) {
        errors.push({
          tagIndex,
          token: primitive,
          message: `${role} programs may not use ${primitive}`,
        });
        return;
      }
      const table = this.modifiers(primitive);
      const modifiers: Record<string, string> = {};
      for (const token of tokens.slice(1)) {
        const match = this.matchKey(token);
        if (!match) {
          errors.push({ tagIndex, token, message: `no modifier key matches "${token}"` });
          continue;
        }
        const spec = table.find((m) => m.key === match.key);
        if (!spec) {
          errors.push({
            tagIndex,
            token,
            message: `"${match.key}" does not apply to ${primitive}`,
          });
          continue;
        }
        if (Array.isArray(roleInfo.keys) && !roleInfo.keys.includes(match.key)) {
          errors.push({
            tagIndex,
            token,
            message: `${role} programs may not use "${match.key}"`,
          });
          continue;
        }
        if (!spec.values.includes(match.value)) {
          errors.push({
            tagIndex,
            token,
            message: `"${match.value}" is not an allowed value for "${match.key}"`,
          });
          continue;
        }
        if (match.key in modifiers) {
          errors.push({ tagIndex, token, message: `"${match.key}" written twice` });
          continue;
        }
        modifiers[match.key] = match.value;
      }
      tags.push({ primitive, modifiers });
    });
    if (errors.length) return { ok: false, program: null, errors };
    return { ok: true, program: { role, tags }, errors: [] };
  }

  /** Completion candidates for the token being typed. */
  complete(text: string, role: "object" | "camera"): string[] {
    const chunks = text.split(this.schema.tag_delimiter);
    const current = chunks[chunks.length - 1];
    const tokens = current.split(/\s+/).filter(Boolean);
    const endsWithSpace = /\s$/.test(current) || current.trim() === "";
    const roleInfo = this.schema.roles[role];
    const allowedPrimitives = roleInfo.primitives;
    if (tokens.length === 0 || (tokens.length === 1 && !endsWithSpace)) {
      const prefix = tokens[0] ?? "";
      return allowedPrimitives.filter((p) => p.startsWith(prefix));
    }
    const primitive = tokens[0];
    if (!allowedPrimitives.includes(primitive)) return [];
    let table = this.modifiers(primitive);
    if (Array.isArray(roleInfo.keys)) {
      table = table.filter((m) => roleInfo.keys.includes(m.key));
    }
    const used = new Set(
      tokens.slice(1, endsWithSpace ? undefined : -1)
        .map((t) => this.matchKey(t)?.key)
        .filter(Boolean),
    );
    const partial = endsWithSpace ? "" : tokens[tokens.length - 1];
    const options: string[] = [];
    for (const spec of table) {
      if (used.has(spec.key)) continue;
      for (const value of spec.values) {
        const candidate = `${spec.key}_${value}`;
        if (candidate.startsWith(partial)) options.push(candidate);
      }
    }
    return options.slice(0, 40);
  }
}

export function serializeProgram(program: ProgramJson, grammar: DslGrammar): string {
  return program.tags
    .map((tag) => {
      const order = grammar.modifiers(tag.primitive).map((m) => m.key);
      const tokens = [tag.primitive];
      for (const key of order) {
        if (key in tag.modifiers) tokens.push(`${key}_${tag.modifiers[key]}`);
      }
      return tokens.join(" ");
    })
    .join(` ${grammar.schema.tag_delimiter} `);
}
