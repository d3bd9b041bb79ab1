"""Command-line entry points for the gateway and its offline tools.

Every option can also come from the environment with the SIGNSTREAM_
prefix (click's auto-envvar scheme: SIGNSTREAM_<COMMAND>_<OPTION>).
"""

from __future__ import annotations

import json
import sys

import click

from . import landmarks, neuralnet, recognizer, retrieval, server


@click.group()
def cli():
    """Real-time sign-language processing gateway."""


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True),
              help="Gateway config file (JSON or key=value).")
def serve(config_path):
    """Run the WebSocket gateway."""
    server.serve(server.load_config(config_path))


@cli.command()
@click.option("--data", "data_path", required=True, type=click.Path(exists=True),
              help="Newline-delimited {label, landmarks} records.")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Where to write the trained model.")
@click.option("--kind", type=click.Choice(["pointnet", "dense"]), default="pointnet",
              show_default=True)
@click.option("--epochs", type=int, default=100, show_default=True)
@click.option("--batch", type=int, default=64, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--val-fraction", type=float, default=0.1, show_default=True)
def train(data_path, out_path, kind, epochs, batch, seed, val_fraction):
    """Train a letter classifier on a landmark dataset."""
    if kind == "pointnet":
        net = neuralnet.build_pointnet_lite()
    else:
        net = neuralnet.build_dense_baseline()
    records = landmarks.load_dataset(data_path)
    dataset = neuralnet.features_from_records(records, net.feature_layout)
    cfg = neuralnet.TrainConfig(epochs=epochs, batch_size=batch, seed=seed,
                                validation_fraction=val_fraction)
    model, history = neuralnet.train(dataset, cfg, net)
    for m in history:
        click.echo(f"epoch {m.epoch:3d}  train loss {m.train_loss:.4f} "
                   f"acc {m.train_accuracy:.4f}  val loss {m.val_loss:.4f} "
                   f"acc {m.val_accuracy:.4f}")
    with open(out_path, "wb") as fh:
        fh.write(neuralnet.save_model(model))
    click.echo(f"saved {kind} model ({len(dataset)} samples) to {out_path}")


@cli.command()
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
def evaluate(data_path, model_path):
    """Report loss and accuracy of a model on a dataset."""
    with open(model_path, "rb") as fh:
        net = neuralnet.load_model(fh.read())
    records = landmarks.load_dataset(data_path)
    dataset = neuralnet.features_from_records(records, net.feature_layout)
    mean_loss, accuracy = neuralnet.evaluate(net, dataset)
    click.echo(f"{len(dataset)} samples: loss {mean_loss:.4f}, accuracy {accuracy:.4f}")


@cli.command("build-posedb")
@click.option("--entries", "entries_path", required=True, type=click.Path(exists=True),
              help='JSONL of {"gloss", "frames"[, "embedding"]}.')
@click.option("--letters", "letters_path", required=True, type=click.Path(exists=True),
              help='JSONL of {"letter", "frames"} covering A-Z.')
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--provider", default="hashed", show_default=True,
              help='"hashed" or "file:<embedding table path>".')
@click.option("--dim", type=int, default=retrieval.DEFAULT_DIMENSION, show_default=True)
@click.option("--fps", type=float, default=retrieval.DEFAULT_FPS, show_default=True)
def build_posedb(entries_path, letters_path, out_dir, provider, dim, fps):
    """Build and save a pose store from entry and letter pose files."""
    prov = retrieval.make_provider(provider, dim)
    store = retrieval.build_store(entries_path, letters_path, prov, fps=fps)
    retrieval.save_store(store, out_dir)
    click.echo(f"wrote store with {len(store.entries)} entries "
               f"({store.manifest.layout.points}-point layout) to {out_dir}")


@cli.command()
@click.option("--text", required=True)
@click.option("--store", "store_dir", required=True, type=click.Path(exists=True))
@click.option("--threshold", type=float, default=retrieval.DEFAULT_THRESHOLD,
              show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Write the stitched pose sequence as JSON.")
@click.option("--provider", default="hashed", show_default=True)
@click.option("--transition-frames", type=int, default=retrieval.DEFAULT_TRANSITION_FRAMES,
              show_default=True)
def translate(text, store_dir, threshold, out_path, provider, transition_frames):
    """Translate text to gloss and retrieve/stitch its pose sequence."""
    store = retrieval.load_store(store_dir)
    prov = retrieval.make_provider(provider, store.manifest.dimension)
    result = retrieval.produce(text, store, provider=prov, threshold=threshold,
                               transition_frames=transition_frames)
    if result.empty_gloss:
        click.echo("nothing to sign: input is empty or stop words only")
        return
    for r in result.results:
        if r.source is retrieval.Source.RETRIEVED:
            click.echo(f"{r.gloss}: retrieved {r.matched[0]} "
                       f"(similarity {r.matched[1]:.4f}, {len(r.sequence)} frames)")
        else:
            click.echo(f"{r.gloss}: fingerspelled ({len(r.sequence)} frames)")
    click.echo(f"total {len(result.sequence)} frames at {result.fps:g} fps")
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump({"fps": result.fps, "frames": result.sequence.frames.tolist()}, fh)
        click.echo(f"wrote pose sequence to {out_path}")


@cli.command("recognize-file")
@click.option("--frames", "frames_path", required=True, type=click.Path(exists=True),
              help="JSONL of wire-format frame records.")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--dictionary", "dictionary_path", type=click.Path(exists=True), default=None)
@click.option("--debounce", type=int, default=5, show_default=True)
@click.option("--absence", type=int, default=10, show_default=True)
@click.option("--letters/--no-letters", "show_letters", default=False,
              help="Also print each committed letter.")
def recognize_file(frames_path, model_path, dictionary_path, debounce, absence, show_letters):
    """Replay a recorded frame log offline and print the transcript."""
    with open(model_path, "rb") as fh:
        net = neuralnet.load_model(fh.read())
    dictionary = (recognizer.load_dictionary(dictionary_path)
                  if dictionary_path else {})
    cfg = recognizer.RecognizerConfig(debounce_frames=debounce, absence_frames=absence,
                                      correction_enabled=bool(dictionary))
    state = recognizer.TranscriptState()
    with open(frames_path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            if record.get("landmarks") is None:
                observation = None
            else:
                frame = landmarks.parse_raw_frame(record)
                nframe = landmarks.normalize(landmarks.canonicalize_handedness(frame))
                features = landmarks.extract_features(nframe, net.feature_layout)
                probs = neuralnet.softmax(neuralnet.forward(net, features))
                observation = recognizer.disambiguate(probs, nframe)
            state, events = recognizer.step(state, cfg, observation, dictionary)
            for event in events:
                if show_letters and event.kind is recognizer.EventKind.LETTER_COMMITTED:
                    click.echo(f"letter {event.letter} ({event.confidence:.2f})")
                elif event.kind is recognizer.EventKind.WORD_FINALIZED:
                    click.echo(f"word {event.raw_word} -> {event.corrected_word}")
    click.echo(recognizer.finalize(state, cfg, dictionary))


def main():
    cli(auto_envvar_prefix="SIGNSTREAM")


if __name__ == "__main__":
    sys.exit(main())
