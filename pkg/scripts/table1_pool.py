"""Pool the bundled 26-record apnea table: overall mean±sd per column and the
AHI correlations with burst duration and inter-burst interval."""

import json

from havok_intermittency.pipeline import load_table1, pool_reports


def main():
    pooled = pool_reports(load_table1())
    print(f"{pooled['n_records']} records")
    for col, s in pooled["columns"].items():
        print(f"{col:>14}: {s['mean']:.2f} ± {s['sd']:.2f}")
    for key, c in pooled["correlations"].items():
        print(f"{key:>14}: r = {c['r']:+.4f}, p = {c['p_value']:.4f}")
    print(json.dumps(pooled["correlations"], indent=2))


if __name__ == "__main__":
    main()
