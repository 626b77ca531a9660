#!/usr/bin/env node
/**
 * gomdeep: train the coefficient autoencoders and export their
 * time-varying coefficient tensors in the shared exchange format.
 *
 *   gomdeep train vae --data <dir|csv...> --topology topo.json --out model/
 *   gomdeep train att --data <dir|csv...> --topology topo.json --out model/
 *   gomdeep export --model model/ --data movement.csv --out coeffs.json
 */

import * as fs from 'node:fs';
import * as path from 'node:path';

import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';

import { initBackend } from './backend.js';
import { framesInOrder, readMotionCsv } from './csv.js';
import { exportCoefficients, writeExchangeFile } from './exchange.js';
import { buildModel, defaultConfig, ModelKind } from './models.js';
import { defaultTrainSpec, makeWindows, trainWithCv } from './train.js';
import { loadTopology } from './topology.js';
import { loadModel, saveModel } from './weights.js';

function listCsvs(items: string[]): string[] {
  const out: string[] = [];
  for (const item of items) {
    if (fs.statSync(item).isDirectory()) {
      out.push(
        ...fs
          .readdirSync(item)
          .filter((f) => f.endsWith('.csv'))
          .sort()
          .map((f) => path.join(item, f)),
      );
    } else {
      out.push(item);
    }
  }
  if (out.length === 0) throw new Error('no motion CSV files found');
  return out;
}

async function cmdTrain(kind: ModelKind, argv: any): Promise<void> {
  const topology = loadTopology(argv.topology);
  const files = listCsvs(argv.data as string[]);
  const sequences = files.map((f) => framesInOrder(readMotionCsv(f), topology.channelNames));
  const windows = makeWindows(sequences);

  const spec = defaultTrainSpec(kind, {
    epochs: argv.epochs,
    batchSize: argv.batch,
    folds: argv.folds,
    seed: argv.seed,
    ...(argv.lr !== undefined ? { learningRate: argv.lr } : {}),
    betaVae: argv.betaVae,
    betaGom: argv.betaGom,
  });
  const config = defaultConfig(kind, topology.nChannels, argv.seed);
  const finalModel = buildModel(topology, config);
  const result = trainWithCv(() => buildModel(topology, config), finalModel, windows, spec);

  fs.mkdirSync(argv.out, { recursive: true });
  saveModel(argv.out, finalModel, argv.topology);
  fs.writeFileSync(
    path.join(argv.out, 'history.json'),
    JSON.stringify({ kind, spec, folds: result.histories, finalTrainLoss: result.finalTrainLoss }, null, 2) + '\n',
  );
  const first = result.histories[0].epochs;
  console.log(
    `trained ${kind} on ${windows.y.length} windows: ` +
      `val loss ${first[0].valPredLoss.toFixed(4)} -> ` +
      `${first[first.length - 1].valPredLoss.toFixed(4)} (fold 0), ` +
      `final train loss ${result.finalTrainLoss.toFixed(4)}`,
  );
}

async function cmdExport(argv: any): Promise<void> {
  const gom = loadModel(argv.model);
  const csv = readMotionCsv(argv.data);
  const frames = framesInOrder(csv, gom.topology.channelNames);
  const result = exportCoefficients(
    gom,
    frames,
    Number(csv.meta.fps ?? '90'),
    csv.meta.class ?? '',
  );
  writeExchangeFile(argv.out, result);
  console.log(`exported ${result.tensors.length} coefficient steps to ${argv.out}`);
}

export async function main(args: string[]): Promise<number> {
  try {
    await initBackend();
    await yargs(args)
      .scriptName('gomdeep')
      .command(
        'train <kind>',
        'train a coefficient autoencoder',
        (y) =>
          y
            .positional('kind', { choices: ['vae', 'att'] as const, demandOption: true })
            .option('data', { type: 'string', array: true, demandOption: true })
            .option('topology', { type: 'string', demandOption: true })
            .option('out', { type: 'string', demandOption: true })
            .option('epochs', { type: 'number', default: 40 })
            .option('batch', { type: 'number', default: 64 })
            .option('folds', { type: 'number', default: 5 })
            .option('seed', { type: 'number', default: 0 })
            .option('lr', { type: 'number' })
            .option('beta-vae', { type: 'number', default: 1.0 })
            .option('beta-gom', { type: 'number', default: 1.0 }),
        async (argv) => cmdTrain(argv.kind as ModelKind, argv),
      )
      .command(
        'export',
        'run a trained model over a movement and write the exchange file',
        (y) =>
          y
            .option('model', { type: 'string', demandOption: true })
            .option('data', { type: 'string', demandOption: true })
            .option('out', { type: 'string', demandOption: true }),
        async (argv) => cmdExport(argv),
      )
      .demandCommand(1)
      .strict()
      .fail((msg, err) => {
        throw err ?? new Error(msg);
      })
      .parseAsync();
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

const isDirectRun = process.argv[1] && process.argv[1].endsWith('cli.js');
if (isDirectRun) {
  main(hideBin(process.argv)).then((code) => {
    process.exitCode = code;
  });
}
