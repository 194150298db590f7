"""Static report figures rendered next to the CSV/JSON outputs."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_STYLE = {"bit_level": dict(color="tab:blue", marker="o"),
          "symbol_level": dict(color="tab:red", marker="s")}


def save_simulation_figure(results, path):
    """Two-panel figure: BLER and average tests per block versus Eb/N0,
    one line per decoder."""
    fig, (ax_bler, ax_tests) = plt.subplots(2, 1, figsize=(6.4, 7.2), sharex=True)
    decoders = sorted({r.decoder for r in results})
    for dec in decoders:
        rows = sorted((r for r in results if r.decoder == dec), key=lambda r: r.ebn0_db)
        x = [r.ebn0_db for r in rows]
        style = _STYLE.get(dec, {})
        ax_bler.semilogy(x, [max(r.bler, 1e-12) for r in rows], label=dec, **style)
        ax_tests.semilogy(x, [r.avg_tests for r in rows], label=dec, **style)
    meta = results[0]
    ax_bler.set_ylabel("BLER")
    ax_bler.set_title(f"{meta.channel}, w_th={meta.w_th}")
    ax_tests.set_ylabel("avg tests per block")
    ax_tests.set_xlabel("Eb/N0 (dB)")
    for ax in (ax_bler, ax_tests):
        ax.grid(True, which="both", alpha=0.4)
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_validation_figure(report, path, top=5):
    """Per Eb/N0 subplot comparing measured structure frequencies against
    their predicted probabilities for the most likely structures."""
    points = report["points"]
    ncols = min(2, len(points))
    nrows = (len(points) + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(4.2 * ncols, 3.2 * nrows),
                             squeeze=False)
    for ax in axes.ravel()[len(points):]:
        ax.set_visible(False)
    for ax, pt in zip(axes.ravel(), points):
        entries = pt["structures"][:top]
        labels = [f"[{e['L1']} {e['L2']}]" for e in entries]
        xs = range(len(entries))
        ax.bar(xs, [e["freq"] or 0.0 for e in entries], width=0.55,
               color="lightsteelblue", label="measured")
        ax.plot(xs, [e["p_theory"] for e in entries], "kx", markersize=9,
                label="predicted")
        ax.set_yscale("log")
        ax.set_xticks(list(xs), labels)
        ax.set_title(f"Eb/N0 = {pt['ebn0_db']:g} dB")
        ax.grid(True, which="both", axis="y", alpha=0.4)
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
