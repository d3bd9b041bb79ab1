/**
 * Minimal JSON-Schema (draft-07 subset) validator covering exactly the
 * constructs the shared wire schema uses: $ref into definitions, oneOf,
 * type/const/enum, object properties with required and closed
 * additionalProperties, array items with bounds, numeric bounds, string
 * pattern and minLength. Kept dependency-free so contract tests run
 * anywhere node does.
 */

export interface Schema {
  [key: string]: unknown;
}

function resolveRef(ref: string, root: Schema): Schema {
  if (!ref.startsWith("#/")) throw new Error(`unsupported $ref ${ref}`);
  let node: unknown = root;
  for (const part of ref.slice(2).split("/")) {
    node = (node as Record<string, unknown>)[part];
    if (node === undefined) throw new Error(`dangling $ref ${ref}`);
  }
  return node as Schema;
}

function typeOf(value: unknown): string {
  if (value === null) return "null";
  if (Array.isArray(value)) return "array";
  if (typeof value === "number") return Number.isInteger(value) ? "integer" : "number";
  return typeof value;
}

function typeMatches(value: unknown, expected: string): boolean {
  const actual = typeOf(value);
  if (expected === "number") return actual === "number" || actual === "integer";
  return actual === expected;
}

export function validate(value: unknown, schema: Schema, root?: Schema): string[] {
  const top = root ?? schema;
  const errors: string[] = [];

  const ref = schema.$ref;
  if (typeof ref === "string") {
    return validate(value, resolveRef(ref, top), top);
  }

  if (Array.isArray(schema.oneOf)) {
    const passing = (schema.oneOf as Schema[]).filter(
      (sub) => validate(value, sub, top).length === 0,
    );
    if (passing.length !== 1) {
      errors.push(`oneOf matched ${passing.length} branches, expected exactly 1`);
    }
    return errors;
  }

  if (schema.type !== undefined) {
    const types = Array.isArray(schema.type) ? (schema.type as string[]) : [schema.type as string];
    if (!types.some((t) => typeMatches(value, t))) {
      return [`expected type ${types.join("|")}, got ${typeOf(value)}`];
    }
  }
  if (schema.const !== undefined && value !== schema.const) {
    errors.push(`expected const ${JSON.stringify(schema.const)}`);
  }
  if (Array.isArray(schema.enum) && !(schema.enum as unknown[]).includes(value)) {
    errors.push(`value not in enum ${JSON.stringify(schema.enum)}`);
  }

  if (typeof value === "number") {
    if (typeof schema.minimum === "number" && value < schema.minimum) {
      errors.push(`${value} below minimum ${schema.minimum}`);
    }
    if (typeof schema.maximum === "number" && value > schema.maximum) {
      errors.push(`${value} above maximum ${schema.maximum}`);
    }
    if (typeof schema.exclusiveMinimum === "number" && value <= schema.exclusiveMinimum) {
      errors.push(`${value} not above exclusive minimum ${schema.exclusiveMinimum}`);
    }
  }

  if (typeof value === "string") {
    if (typeof schema.minLength === "number" && value.length < schema.minLength) {
      errors.push(`string shorter than minLength ${schema.minLength}`);
    }
    if (typeof schema.pattern === "string" && !new RegExp(schema.pattern).test(value)) {
      errors.push(`string does not match pattern ${schema.pattern}`);
    }
  }

  if (Array.isArray(value)) {
    if (typeof schema.minItems === "number" && value.length < schema.minItems) {
      errors.push(`array shorter than minItems ${schema.minItems}`);
    }
    if (typeof schema.maxItems === "number" && value.length > schema.maxItems) {
      errors.push(`array longer than maxItems ${schema.maxItems}`);
    }
    if (schema.items !== undefined) {
      value.forEach((item, i) => {
        for (const err of validate(item, schema.items as Schema, top)) {
          errors.push(`[${i}] ${err}`);
        }
      });
    }
  }

  if (typeOf(value) === "object") {
    const obj = value as Record<string, unknown>;
    const properties = (schema.properties ?? {}) as Record<string, Schema>;
    if (Array.isArray(schema.required)) {
      for (const key of schema.required as string[]) {
        if (!(key in obj)) errors.push(`missing required property ${key}`);
      }
    }
    for (const [key, sub] of Object.entries(properties)) {
      if (key in obj) {
        for (const err of validate(obj[key], sub, top)) {
          errors.push(`${key}: ${err}`);
        }
      }
    }
    if (schema.additionalProperties === false) {
      for (const key of Object.keys(obj)) {
        if (!(key in properties)) errors.push(`unexpected property ${key}`);
      }
    }
  }

  return errors;
}

/** Throwing wrapper for tests: asserts value matches the schema. */
export function assertValid(value: unknown, schema: Schema): void {
  const errors = validate(value, schema);
  if (errors.length > 0) {
    throw new Error(`schema violation: ${errors.join("; ")} in ${JSON.stringify(value)}`);
  }
}
