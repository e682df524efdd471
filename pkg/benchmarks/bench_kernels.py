"""Compare the compiled kernels against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--rows N] [--repeats N]
"""

import argparse

from wanderseg.benchmark import format_results, run_benchmark


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rows", type=int, default=40)
    parser.add_argument("--repeats", type=int, default=500)
    args = parser.parse_args()
    results = run_benchmark(rows=args.rows, cols=args.rows,
                            repeats=args.repeats)
    print(format_results(results))


if __name__ == "__main__":
    main()
