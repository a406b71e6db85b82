"""Convert downloaded benchmark files into the loader's CSV layout.

The output always has a header row, a ``label`` column first and one numeric
column per feature, which is what ``hdlss bench --data`` expects.

Supported inputs:
  ucr         UCR time-series archive TSV (no header, class label in column 0)
  compcancer  genes-by-samples text: first row sample ids, second row class
              labels, then one gene per row with its id in column 0
  orange      biolab .tab files: header row, type row, flag row ("class" marks
              the label column)
"""
import re
import argparse

import numpy as np
import pandas as pd
from tqdm import tqdm


# ---------------------------
# Helpers
# ---------------------------

def clean_label(x) -> str:
    if not isinstance(x, str):
        x = str(x)
    x = re.sub(r"\s+", " ", x).strip()
    # UCR labels come out of float parsing as "1.0"
    if re.fullmatch(r"-?\d+\.0+", x):
        x = x.split(".")[0]
    return x


def normalize_value(x):
    if pd.isna(x):
        return None
    x = str(x).strip()
    if x.lower() in ["", "nan", "none", "?", "na"]:
        return None
    try:
        return float(x)
    except ValueError:
        return None


def read_ucr(path: str) -> pd.DataFrame:
    raw = pd.read_csv(path, sep=r"\s+", header=None, dtype=str, engine="python")
    labels = raw.iloc[:, 0].apply(clean_label)
    features = raw.iloc[:, 1:]
    features.columns = [f"t{k}" for k in range(1, features.shape[1] + 1)]
    return _assemble(labels, features)


def read_compcancer(path: str) -> pd.DataFrame:
    raw = pd.read_csv(path, sep="\t", header=None, dtype=str)
    labels = raw.iloc[1, 1:].apply(clean_label).reset_index(drop=True)
    genes = raw.iloc[2:, :]
    features = genes.iloc[:, 1:].T.reset_index(drop=True)
    features.columns = [clean_label(g) for g in genes.iloc[:, 0]]
    return _assemble(labels, features)


def read_orange(path: str) -> pd.DataFrame:
    raw = pd.read_csv(path, sep="\t", header=None, dtype=str, keep_default_na=False)
    names, flags = raw.iloc[0].tolist(), raw.iloc[2].tolist()
    class_cols = [k for k, flag in enumerate(flags) if "class" in str(flag)]
    if len(class_cols) != 1:
        raise ValueError(f"expected one class column in {path}, found {len(class_cols)}")
    label_k = class_cols[0]
    meta = [k for k, flag in enumerate(flags) if "meta" in str(flag) or "ignore" in str(flag)]
    keep = [k for k in range(len(names)) if k != label_k and k not in meta]
    body = raw.iloc[3:].reset_index(drop=True)
    features = body.iloc[:, keep]
    features.columns = [names[k] for k in keep]
    return _assemble(body.iloc[:, label_k].apply(clean_label), features)


def _assemble(labels: pd.Series, features: pd.DataFrame) -> pd.DataFrame:
    tqdm.pandas(desc="parsing")
    numeric = features.progress_apply(lambda col: col.map(normalize_value))
    bad = numeric.isna().any(axis=1).to_numpy()
    if bad.any():
        print(f"Dropping {int(bad.sum())} rows with missing or non-numeric values")
    out = numeric.loc[~bad].astype(np.float64).reset_index(drop=True)
    out.insert(0, "label", labels.loc[~bad].reset_index(drop=True).to_numpy())
    return out


READERS = {"ucr": read_ucr, "compcancer": read_compcancer, "orange": read_orange}


# ---------------------------
# Main
# ---------------------------

def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("input", nargs="+", help="input file(s); UCR train and test files are concatenated")
    parser.add_argument("--format", choices=sorted(READERS), required=True)
    parser.add_argument("--out", required=True, help="output CSV")
    args = parser.parse_args(argv)

    frames = []
    for path in args.input:
        print("Loading", path)
        frames.append(READERS[args.format](path))
    df = pd.concat(frames, ignore_index=True)

    df.to_csv(args.out, index=False)
    print("Saved:", args.out)
    print("Rows:", len(df), "Features:", df.shape[1] - 1)
    print("Class counts:", df["label"].value_counts().sort_index().to_dict())


if __name__ == "__main__":
    main()
