/**
 * Fine-tuning for the fixture-class backend. The base representation is
 * parameter-free, so the trainable parameters are a residual affine
 * adapter over the sentence vector plus a binary classification head.
 * Binary cross-entropy, adaptive-moment updates with fixed weight decay,
 * warmup-linear schedule. No RNG anywhere: batches run in payload order,
 * so two identical requests train identical versions.
 */

import { ValidationError } from "./fixture.js";

export interface FinetuneOptions {
  epochs: number;
  learningRate: number;
  batchSize: number;
  weightDecay: number;
  warmupFraction: number;
}

// Defaults are this server's own; nothing upstream pins them.
export const FINETUNE_DEFAULTS: FinetuneOptions = {
  epochs: 4,
  learningRate: 0.05,
  batchSize: 8,
  weightDecay: 0.01,
  warmupFraction: 0.1,
};

/** Adapter weights: adapted = e + W e + b, logit = headW . adapted + headB. */
export interface AdapterModel {
  dim: number;
  w: number[][];
  b: number[];
  headW: number[];
  headB: number;
}

export interface FinetuneResult {
  model: AdapterModel;
  initialLoss: number;
  epochLosses: number[];
}

/** Linear warmup to 1 over the warmup span, then linear decay to 0. */
export function scheduleMultiplier(step: number, totalSteps: number, warmupFraction: number): number {
  const warmup = Math.floor(totalSteps * warmupFraction);
  if (step < warmup) return (step + 1) / warmup;
  if (totalSteps === warmup) return 1;
  return Math.max(0, (totalSteps - step) / (totalSteps - warmup));
}

export function applyAdapter(model: AdapterModel, vector: number[]): number[] {
  const out: number[] = new Array(model.dim);
  for (let i = 0; i < model.dim; i++) {
    let acc = vector[i] + model.b[i];
    const row = model.w[i];
    for (let j = 0; j < model.dim; j++) acc += row[j] * vector[j];
    out[i] = acc;
  }
  return out;
}

function sigmoid(z: number): number {
  return z >= 0 ? 1 / (1 + Math.exp(-z)) : Math.exp(z) / (1 + Math.exp(z));
}

const EPS = 1e-12;

function bce(p: number, label: number): number {
  const clamped = Math.min(1 - EPS, Math.max(EPS, p));
  return -(label * Math.log(clamped) + (1 - label) * Math.log(1 - clamped));
}

class AdamW {
  private readonly m: Float64Array;
  private readonly v: Float64Array;
  private t = 0;
  private readonly beta1 = 0.9;
  private readonly beta2 = 0.999;
  private readonly eps = 1e-8;

  constructor(
    size: number,
    private readonly learningRate: number,
    private readonly weightDecay: number,
  ) {
    this.m = new Float64Array(size);
    this.v = new Float64Array(size);
  }

  step(params: Float64Array, grads: Float64Array, lrScale: number): void {
    this.t += 1;
    const lr = this.learningRate * lrScale;
    const bc1 = 1 - this.beta1 ** this.t;
    const bc2 = 1 - this.beta2 ** this.t;
    for (let i = 0; i < params.length; i++) {
      this.m[i] = this.beta1 * this.m[i] + (1 - this.beta1) * grads[i];
      this.v[i] = this.beta2 * this.v[i] + (1 - this.beta2) * grads[i] * grads[i];
      const mhat = this.m[i] / bc1;
      const vhat = this.v[i] / bc2;
      params[i] -= lr * (mhat / (Math.sqrt(vhat) + this.eps) + this.weightDecay * params[i]);
    }
  }
}

// Flat parameter layout: W row-major, then b, then headW, then headB.
function unflatten(params: Float64Array, dim: number): AdapterModel {
  const w: number[][] = [];
  for (let i = 0; i < dim; i++) {
    w.push(Array.from(params.subarray(i * dim, (i + 1) * dim)));
  }
  const b = Array.from(params.subarray(dim * dim, dim * dim + dim));
  const headW = Array.from(params.subarray(dim * dim + dim, dim * dim + 2 * dim));
  const headB = params[dim * dim + 2 * dim];
  return { dim, w, b, headW, headB };
}

function meanLoss(params: Float64Array, dim: number, vectors: number[][], labels: number[]): number {
  const model = unflatten(params, dim);
  let total = 0;
  for (let i = 0; i < vectors.length; i++) {
    const adapted = applyAdapter(model, vectors[i]);
    let z = model.headB;
    for (let j = 0; j < dim; j++) z += model.headW[j] * adapted[j];
    total += bce(sigmoid(z), labels[i]);
  }
  return total / vectors.length;
}

export function finetune(
  vectors: number[][],
  labels: number[],
  options: Partial<FinetuneOptions> = {},
): FinetuneResult {
  if (vectors.length === 0 || vectors.length !== labels.length) {
    throw new ValidationError("finetune needs one label per vector");
  }
  const dim = vectors[0].length;
  if (!vectors.every((v) => v.length === dim)) {
    throw new ValidationError("finetune vectors must share one dimension");
  }
  if (!labels.some((l) => l === 1) || !labels.some((l) => l === 0)) {
    throw new ValidationError("finetune needs both classes present");
  }
  const opts = { ...FINETUNE_DEFAULTS, ...options };
  if (opts.epochs < 1 || opts.batchSize < 1 || opts.learningRate <= 0) {
    throw new ValidationError("finetune hyperparameters out of range");
  }

  const size = dim * dim + 2 * dim + 1;
  const params = new Float64Array(size); // zero init: adapter starts as identity
  const grads = new Float64Array(size);
  const optimizer = new AdamW(size, opts.learningRate, opts.weightDecay);

  const batches: Array<[number, number]> = [];
  for (let start = 0; start < vectors.length; start += opts.batchSize) {
    batches.push([start, Math.min(start + opts.batchSize, vectors.length)]);
  }
  const totalSteps = opts.epochs * batches.length;

  const initialLoss = meanLoss(params, dim, vectors, labels);
  const epochLosses: number[] = [];
  let step = 0;
  for (let epoch = 0; epoch < opts.epochs; epoch++) {
    for (const [start, end] of batches) {
      grads.fill(0);
      const model = unflatten(params, dim);
      for (let i = start; i < end; i++) {
        const e = vectors[i];
        const adapted = applyAdapter(model, e);
        let z = model.headB;
        for (let j = 0; j < dim; j++) z += model.headW[j] * adapted[j];
        const dz = sigmoid(z) - labels[i];
        // headW gradient: dz * adapted; adapter gradient flows through headW.
        for (let j = 0; j < dim; j++) {
          grads[dim * dim + dim + j] += dz * adapted[j];
          const dAdapted = dz * model.headW[j];
          grads[dim * dim + j] += dAdapted;
          for (let l = 0; l < dim; l++) {
            grads[j * dim + l] += dAdapted * e[l];
          }
        }
        grads[size - 1] += dz;
      }
      const count = end - start;
      for (let i = 0; i < size; i++) grads[i] /= count;
      optimizer.step(params, grads, scheduleMultiplier(step, totalSteps, opts.warmupFraction));
      step += 1;
    }
    epochLosses.push(meanLoss(params, dim, vectors, labels));
  }
  return { model: unflatten(params, dim), initialLoss, epochLosses };
}
