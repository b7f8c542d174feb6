import os
from typing import List, Sequence

import pandas as pd

VERSION = '0.3.0'
FLOAT_FORMAT = '%.17g'


def output_header(config_hash: str) -> List[str]:
    return [f'winfo {VERSION} config={config_hash}']


def write_frame(frame: pd.DataFrame, save_path: str, header: Sequence[str] = ()):
    """CSV with ``# ``-prefixed header lines; floats written round-trip exact."""
    dirname = os.path.dirname(save_path)
    if dirname:
        os.makedirs(dirname, exist_ok=True)
    with open(save_path, 'w', newline='') as f:
        for line in header:
            f.write(f'# {line}\n')
        frame.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')


def read_frame(load_path: str) -> pd.DataFrame:
    return pd.read_csv(load_path, comment='#')


def read_comment_lines(load_path: str) -> List[str]:
    lines = []
    with open(load_path) as f:
        for line in f:
            if not line.startswith('#'):
                break
            lines.append(line[1:].strip())
    return lines


def write_frames(frames: dict, dir_name: str, header: Sequence[str] = ()):
    """One CSV per ``{file name: frame}`` entry under ``dir_name``."""
    os.makedirs(dir_name, exist_ok=True)
    for file_name, frame in frames.items():
        write_frame(frame, os.path.join(dir_name, file_name), header)
