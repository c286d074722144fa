import type { ResponseReply, ResultPayload, ScaleItemPayload } from "./types.js";

// One question at a time, progress tracked, rejections surfaced inline.
// All progression facts come from the server reply; the model only holds
// what to show next.

export interface FormModel {
  scaleId: string;
  title: string;
  item: ScaleItemPayload;
  answered: number;
  total: number;
  inlineError: string | null;
}

export function validateItemPayload(raw: unknown): string[] {
  const findings: string[] = [];
  const item = raw as Partial<ScaleItemPayload> | null;
  if (!item || typeof item !== "object") {
    return ["item payload missing"];
  }
  if (typeof item.item_id !== "string" || !item.item_id) findings.push("item_id missing");
  if (typeof item.prompt !== "string" || !item.prompt) findings.push("prompt missing");
  if (!Array.isArray(item.options) || item.options.length < 2) {
    findings.push("options must list at least 2 choices");
  } else {
    for (const option of item.options) {
      if (typeof option.label !== "string" || typeof option.value !== "number") {
        findings.push("option entries need label and numeric value");
        break;
      }
    }
    const values = item.options.map((o) => o.value);
    if (new Set(values).size !== values.length) findings.push("option values must be distinct");
  }
  if (typeof item.total !== "number" || item.total < 1) findings.push("total missing");
  if (typeof item.answered !== "number" || item.answered < 0) findings.push("answered missing");
  return findings;
}

export interface FormStart {
  form: FormModel | null;
  error: string | null;
}

export function startForm(item: unknown): FormStart {
  const findings = validateItemPayload(item);
  if (findings.length > 0) {
    return { form: null, error: `scale payload invalid: ${findings.join("; ")}` };
  }
  const valid = item as ScaleItemPayload;
  return {
    form: {
      scaleId: valid.scale_id,
      title: valid.title ?? valid.scale_id,
      item: valid,
      answered: valid.answered,
      total: valid.total,
      inlineError: null,
    },
    error: null,
  };
}

export interface FormAdvance {
  form: FormModel | null;
  result: ResultPayload | null;
  error: string | null;
}

export function advanceForm(current: FormModel, reply: ResponseReply): FormAdvance {
  if (reply.done) {
    return { form: null, result: reply.result ?? null, error: null };
  }
  const next = startForm(reply.item);
  if (next.form === null) {
    return { form: null, result: null, error: next.error };
  }
  return { form: next.form, result: null, error: null };
}

export function rejectForm(current: FormModel, message: string): FormModel {
  // Server rejection: same item stays on screen, error shown inline.
  return { ...current, inlineError: message };
}

export function progressLabel(form: FormModel): string {
  return `${form.answered + 1}/${form.total}`;
}
