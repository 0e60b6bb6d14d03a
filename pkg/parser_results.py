#!/usr/bin/python3
import argparse

import pandas as pd

# Group-by column used when none is given, the first one present in the file
DEFAULT_GROUPS = ("case", "T", "rank", "kind")


def parse_args() -> argparse.Namespace:
    """ Parse the args and return an args namespace """
    parser = argparse.ArgumentParser(description='Summaries of the experiment result CSV files')
    parser.add_argument('--csv', help="Path to a result CSV file", required=True)
    parser.add_argument('--group-by', dest="group_by", help="Column to group by", default=None)

    args, remaining_argv = parser.parse_known_args()

    return args


def summarize(df: pd.DataFrame, group_by: str = None) -> pd.DataFrame:
    """ Mean of every numeric column per group, plus the group sizes """
    if group_by is None:
        group_by = next((column for column in DEFAULT_GROUPS if column in df.columns), None)
    if group_by is None:
        return df.describe()
    if group_by not in df.columns:
        raise ValueError(f"{group_by} is not a column of the file, columns: {list(df.columns)}")
    numeric = df.select_dtypes(include=["number", "bool"]).columns.drop(group_by, errors="ignore")
    summary = df.groupby(group_by)[list(numeric)].mean()
    summary.insert(0, "count", df.groupby(group_by).size())
    return summary


def main() -> None:
    args = parse_args()
    df = pd.read_csv(args.csv)
    print(summarize(df, args.group_by))


if __name__ == '__main__':
    main()
