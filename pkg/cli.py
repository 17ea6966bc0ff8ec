"""
Command-line front end for FiberLink
Config ingestion, Table I reproduction, simulations, optimizations and figure-data CSVs
"""

import sys
import logging
import argparse
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

import config
from analytics import cooperativity, f_ap, l_max, l_max_curve, p1_tilde
from dynamics import converge_modes, integrate_full_with_atomic_decay
from eigenmodes import analytic_three_mode_eigs, diagonalize_field_sector, integrate_hybrid
from errors import ConfigError, FiberLinkError
from optimizer import cooperativity_ladder, optimize_ap, optimize_wps, sweep_length, timing_sensitivity
from params import attenuation_to_rate, derive_rates, effective_length, fiber_transmission, to_hz
from protocols import build_schedule
from utils.presets import get_preset, preset_variants, table1_rows, presets
from utils.reporting import RunManifest, to_json, write_csv, write_series_csv
from utils.units import load_setup, protocol_from_dict, setup_from_dict, sim_from_dict, space_from_dict

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ['variant', 'protocol', 'L [m]', 'best_F', 'P1', 'f_ap', 'T_opt [s]', 'x_spl_opt',
                 'omega_ratio_opt', 'n_modes_used']

TABLE_COLUMNS = ['name', 'kappa_cav/2π [MHz]', 'gamma_cav/2π [MHz]', 'P_out [%]',
                 'L_eff printed [m]', 'L_eff [m]', 'P1 printed [%]', 'P1 [%]', 'ΔP1 [pp]',
                 'F_AP printed [%]', 'F_AP [%]', 'ΔF_AP [pp]']


def _emit(args, payload: Dict[str, Any], lines: Sequence[str]):
    """Human-readable lines, or the payload as JSON with --json"""
    if args.json:
        print(to_json(payload))
    else:
        for line in lines:
            print(line)


def _inputs(args) -> List[Tuple[str, Dict[str, Any]]]:
    """(label, document) pairs from --fig or --config"""
    if args.fig:
        preset = get_preset(args.fig)
        return [(v['label'], v['setup']) for v in preset_variants(preset)]
    if args.config:
        _, doc = load_setup(args.config)
        return [('', doc)]
    raise ConfigError("either --config or --fig is required", field='--config')


def _single_input(args) -> Dict[str, Any]:
    inputs = _inputs(args)
    if len(inputs) > 1:
        logger.info(f"Preset has {len(inputs)} variants; using '{inputs[0][0]}'")
    return inputs[0][1]


def _preset(args) -> Dict[str, Any]:
    return get_preset(args.fig) if args.fig else {}


def _sim(doc: Dict[str, Any], args):
    return sim_from_dict(doc.get('sim'), n_modes=getattr(args, 'n', None))


def _out_dir(args) -> Path:
    out = Path(args.out or config.OUT_DIR)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(args, command: str, snapshot: Any) -> RunManifest:
    arguments = {k: v for k, v in vars(args).items() if k != 'handler'}
    return RunManifest(command=command, arguments=arguments, config=snapshot)


def _finish(args, manifest: RunManifest, paths: Sequence[Path]) -> Path:
    for path in paths:
        manifest.add_output(path)
    return manifest.write(_out_dir(args))


def cmd_analyze(args) -> Dict[str, Any]:
    doc = _single_input(args)
    cfg = setup_from_dict(doc)
    rates = derive_rates(cfg)
    analytic = f_ap(rates.p_out, rates.gamma_fib, rates.length_L, rates.speed_cf)
    report = {**rates.as_hz(), 'f_ap': analytic, 'tau_s': rates.tau, 'fiber_loss_exponent': rates.fiber_loss_exponent}
    if cfg.atom.gamma_sp > 0:
        C = cooperativity(cfg.atom.g_atc, rates.kappa, cfg.atom.gamma_sp)
        report.update({'cooperativity': C, 'p1_tilde': p1_tilde(C, rates.p1)})

    lines = [
        "📡 FiberLink setup analysis",
        f"  κ_cav/2π    {report['kappa_cav_hz']:.6g} Hz",
        f"  γ_cav/2π    {report['gamma_cav_hz']:.6g} Hz",
        f"  κ/2π        {report['kappa_hz']:.6g} Hz",
        f"  FSR/2π      {report['fsr_fib_hz']:.6g} Hz",
        f"  g/2π        {report['g_ab_hz']:.6g} Hz",
        f"  γ_fib/2π    {report['gamma_fib_hz']:.6g} Hz",
        f"  𝔫 = 2κ/FSR  {rates.sm_param:.6g}",
        f"  L_eff       {rates.l_eff:.6g} m",
        f"  P_out       {100 * rates.p_out:.3f} %",
        f"  P_fib       {100 * rates.p_fib:.3f} %",
        f"  P1          {100 * rates.p1:.3f} %",
        f"  F_AP        {100 * analytic:.3f} %",
    ]
    if 'cooperativity' in report:
        lines += [f"  C           {report['cooperativity']:.6g}",
                  f"  P̃1          {100 * report['p1_tilde']:.3f} %"]
    _emit(args, report, lines)
    return report


def table_rows() -> List[Dict[str, Any]]:
    """Recompute L_eff, P1 and F_AP for every Table I row with the caption's fiber"""
    caption = presets.caption_fiber()
    cf = config.DEFAULT_FIBER_SPEED
    length = caption['length_L']
    gamma_fib = attenuation_to_rate(caption['attenuation_db_per_km'], cf)
    p_fib = fiber_transmission(gamma_fib, length, cf)

    out = []
    for row in table1_rows():
        p_out = row['p_out_pct'] / 100.0
        kappa = 0.5 * (row['kappa_cav_mhz'] + row['gamma_cav_mhz']) * 2.0 * np.pi * 1e6
        p1 = 100.0 * p_out * p_out * p_fib
        fap = 100.0 * f_ap(p_out, gamma_fib, length, cf)
        out.append({
            'name': row['name'],
            'kappa_cav_mhz': row['kappa_cav_mhz'],
            'gamma_cav_mhz': row['gamma_cav_mhz'],
            'p_out_pct': row['p_out_pct'],
            'l_eff_printed': row['l_eff_m'],
            'l_eff': effective_length(kappa, cf),
            'p1_printed': row['p1_pct'],
            'p1': p1,
            'delta_p1': p1 - row['p1_pct'],
            'f_ap_printed': row['f_ap_pct'],
            'f_ap': fap,
            'delta_f_ap': fap - row['f_ap_pct'],
        })
    return out


def cmd_table(args) -> List[Dict[str, Any]]:
    rows = table_rows()
    keys = ['name', 'kappa_cav_mhz', 'gamma_cav_mhz', 'p_out_pct', 'l_eff_printed', 'l_eff',
            'p1_printed', 'p1', 'delta_p1', 'f_ap_printed', 'f_ap', 'delta_f_ap']
    manifest = _manifest(args, 'table', {'caption_fiber': presets.caption_fiber()})
    path = write_csv(_out_dir(args) / 'table1.csv', TABLE_COLUMNS, [[r[k] for k in keys] for r in rows])
    _finish(args, manifest, [path])

    lines = ["📋 Table I recomputed (P_fib at 500 m, 0.2 dB/km)"]
    for r in rows:
        lines.append(f"  {r['name']:<10} P1 {r['p1']:6.2f} % ({r['delta_p1']:+.2f})   "
                     f"F_AP {r['f_ap']:6.2f} % ({r['delta_f_ap']:+.2f})")
    _emit(args, {'rows': rows, 'csv': str(path)}, lines)
    return rows


def cmd_simulate(args) -> Dict[str, Any]:
    doc = _single_input(args)
    cfg = setup_from_dict(doc)
    rates = derive_rates(cfg)
    protocol = protocol_from_dict(doc.get('protocol'))
    if args.protocol:
        protocol['type'] = args.protocol
    sched = build_schedule(protocol, rates, cfg.atom)
    sim = _sim(doc, args)

    manifest = _manifest(args, 'simulate', doc)
    if args.basis == 'hybrid':
        result = integrate_hybrid(cfg, sched, sim)
    elif args.converge:
        result = converge_modes(cfg, sched, sim, args.delta_tol)
    else:
        result = integrate_full_with_atomic_decay(cfg, sched, sim)

    path = write_series_csv(_out_dir(args) / 'simulate_series.csv', result,
                            track_modes=sim.track_modes, full_modes=args.full_modes)
    _finish(args, manifest, [path])

    summary = {**result.summary(), 'protocol': sched.protocol_tag.value, 'p1': rates.p1, 'csv': str(path)}
    lines = [
        f"🔬 {sched.protocol_tag.value} transfer with N={result.n_modes_used}",
        f"  F           {result.fidelity:.8f}",
        f"  P1          {rates.p1:.8f}",
        f"  settled     {result.converged}",
        f"  budget err  {result.budget_error:.3g}",
    ] + [f"  loss {k:<9}{v:.6g}" for k, v in result.loss_ledger.as_dict().items()]
    _emit(args, summary, lines)
    return summary


def cmd_optimize(args) -> Dict[str, Any]:
    doc = _single_input(args)
    cfg = setup_from_dict(doc)
    sim = _sim(doc, args)
    protocol = args.protocol or str((doc.get('protocol') or {}).get('type', 'ap')).lower()

    manifest = _manifest(args, 'optimize', doc)
    space = space_from_dict(doc.get('search'))
    if protocol == 'wps':
        best = optimize_wps(cfg, sim, space.wps_range(derive_rates(cfg).kappa), space.wps_points,
                            args.delta_tol, args.threads)
    else:
        best = optimize_ap(cfg, space, sim, args.delta_tol, args.threads)

    rates = derive_rates(cfg)
    analytic = f_ap(rates.p_out, rates.gamma_fib, rates.length_L, rates.speed_cf)
    columns = ['protocol', 'best_F', 'P1', 'f_ap', 'evaluations', 'regime_ok'] + sorted(best.best_params)
    row = [best.protocol.value, best.best_F, rates.p1, analytic, best.evaluations, best.regime_ok]
    row += [best.best_params[k] for k in sorted(best.best_params)]
    path = write_csv(_out_dir(args) / 'optimize.csv', columns, [row])
    _finish(args, manifest, [path])

    payload = {'protocol': best.protocol.value, 'best_F': best.best_F, 'best_params': best.best_params,
               'evaluations': best.evaluations, 'regime_ok': best.regime_ok, 'p1': rates.p1, 'f_ap': analytic,
               'csv': str(path)}
    lines = [f"🎯 Optimized {best.protocol.value}: F = {best.best_F:.6f} (P1 {rates.p1:.6f}, F_AP {analytic:.6f})"]
    lines += [f"  {k:<12}{v:.6g}" for k, v in sorted(best.best_params.items())]
    if not best.regime_ok:
        lines.append("  ⚠️ optimum lies outside the eliminated-cavity regime")
    _emit(args, payload, lines)
    return payload


def _lengths(args, preset: Dict[str, Any], doc: Dict[str, Any]) -> List[float]:
    if args.lengths:
        return [float(x) for x in args.lengths.split(',')]
    if preset.get('lengths'):
        return [float(x) for x in preset['lengths']]
    if doc.get('lengths'):
        return [float(x) for x in doc['lengths']]
    raise ConfigError("no fiber lengths given; use --lengths or a preset", field='--lengths')


def _protocols(args, preset: Dict[str, Any]) -> List[str]:
    if args.protocol:
        return [args.protocol]
    return list(preset.get('protocols') or ['ap'])


def cmd_sweep(args) -> List[Dict[str, Any]]:
    preset = _preset(args)
    inputs = _inputs(args)
    if preset.get('ladder'):
        return _cmd_ladder(args, preset, inputs)

    manifest = _manifest(args, 'sweep-length', {'fig': args.fig, 'inputs': dict(inputs)})
    rows = []
    for label, doc in inputs:
        cfg = setup_from_dict(doc)
        lengths = _lengths(args, preset, doc)
        sim = _sim(doc, args)
        space = space_from_dict(doc.get('search'))
        for protocol in _protocols(args, preset):
            for r in sweep_length(cfg, lengths, space, sim, protocol, args.delta_tol, args.threads):
                rows.append({'variant': label, 'protocol': protocol, 'L': r.L, 'best_F': r.best_F, 'P1': r.P1,
                             'f_ap': r.f_ap, 'T_opt': r.T_opt, 'x_spl_opt': r.x_spl_opt,
                             'omega_ratio_opt': r.omega_ratio_opt, 'n_modes_used': r.n_modes_used})

    keys = ['variant', 'protocol', 'L', 'best_F', 'P1', 'f_ap', 'T_opt', 'x_spl_opt', 'omega_ratio_opt', 'n_modes_used']
    name = f"sweep_fig{args.fig}.csv" if args.fig else 'sweep_length.csv'
    path = write_csv(_out_dir(args) / name, SWEEP_COLUMNS, [[r[k] for k in keys] for r in rows])
    _finish(args, manifest, [path])

    lines = [f"📏 Length sweep ({len(rows)} points) -> {path}"]
    lines += [f"  {r['variant'] or '-':<10} {r['protocol']:<4} L={r['L']:<8g} F={r['best_F']:.5f} "
              f"P1={r['P1']:.5f} f_ap={r['f_ap']:.5f}" for r in rows]
    _emit(args, {'rows': rows, 'csv': str(path)}, lines)
    return rows


def _cmd_ladder(args, preset: Dict[str, Any], inputs) -> List[Dict[str, Any]]:
    manifest = _manifest(args, 'sweep-length', {'fig': args.fig, 'inputs': dict(inputs)})
    label, doc = inputs[0]
    cfg = setup_from_dict(doc)
    sim = _sim(doc, args)
    space = space_from_dict(doc.get('search'))
    rows = []
    for protocol in _protocols(args, preset):
        rows += cooperativity_ladder(cfg, preset['ladder'], preset.get('length', cfg.fiber.length_L),
                                     space, sim, protocol, args.delta_tol, args.threads)

    keys = ['protocol', 'C', 'best_F', 'P1_tilde', 'P1']
    path = write_csv(_out_dir(args) / f"ladder_fig{args.fig}.csv", keys, [[r[k] for k in keys] for r in rows])
    _finish(args, manifest, [path])
    lines = [f"🧪 Cooperativity ladder -> {path}"]
    lines += [f"  {r['protocol']:<4} C={r['C']:<6g} F={r['best_F']:.5f} P̃1={r['P1_tilde']:.5f}" for r in rows]
    _emit(args, {'rows': rows, 'csv': str(path)}, lines)
    return rows


def _lmax_fiber(args) -> List[Tuple[str, float, float]]:
    """(label, γ_fib, c_f) for each fiber the command should evaluate"""
    if args.fig or args.config:
        out = []
        for label, doc in _inputs(args):
            rates = derive_rates(setup_from_dict(doc))
            out.append((label, rates.gamma_fib, rates.speed_cf))
        return out
    cf = config.DEFAULT_FIBER_SPEED
    return [(f'{args.attenuation:g} dB/km', attenuation_to_rate(args.attenuation, cf), cf)]


def cmd_lmax(args) -> Dict[str, Any]:
    fibers = _lmax_fiber(args)
    if args.pout is not None:
        label, gamma_fib, cf = fibers[0]
        value = l_max(args.pout, gamma_fib, cf, args.margin)
        if args.json:
            print(to_json({'p_out': args.pout, 'l_max_m': value, 'fiber': label}))
        else:
            print(f"{value:.6g}")
        return {'p_out': args.pout, 'l_max_m': value}

    p_values = [float(p) for p in _preset(args).get('p_out') or np.round(np.linspace(0.05, 0.95, 19), 4)]
    manifest = _manifest(args, 'lmax', {'fig': args.fig, 'margin': args.margin})
    rows = []
    for label, gamma_fib, cf in fibers:
        for p, L in l_max_curve(p_values, gamma_fib, cf, args.margin):
            rows.append([label, p, L])
    path = write_csv(_out_dir(args) / 'lmax.csv', ['fiber', 'P_out', 'L_max [m]'], rows)
    _finish(args, manifest, [path])
    _emit(args, {'rows': rows, 'csv': str(path)},
          [f"📐 L_max curve -> {path}"] + [f"  {r[0]:<10} P_out={r[1]:<6g} L_max={r[2]:.6g} m" for r in rows])
    return {'rows': rows}


def cmd_modes(args) -> Dict[str, Any]:
    doc = _single_input(args)
    cfg = setup_from_dict(doc)
    n_modes = args.n or 1
    modes = diagonalize_field_sector(cfg, n_modes)

    columns = ['index', 'omega/2π [Hz]', 'cavity_content', 'decay/2π [Hz]']
    rows = [[r['index'], to_hz(r['frequency']), r['cavity_content'], to_hz(r['decay'])] for r in modes.rows()]
    payload: Dict[str, Any] = {'n_modes': n_modes}
    if n_modes == 1:
        rates = derive_rates(cfg)
        analytic = analytic_three_mode_eigs(rates.g_ab, rates.fsr_fib)
        columns.append('analytic omega/2π [Hz]')
        for row, w in zip(rows, analytic):
            row.append(to_hz(w))
        payload['max_deviation_hz'] = float(np.max(np.abs(to_hz(analytic) - to_hz(modes.frequencies))))

    manifest = _manifest(args, 'modes', doc)
    path = write_csv(_out_dir(args) / f'modes_n{n_modes}.csv', columns, rows)
    _finish(args, manifest, [path])
    payload.update({'rows': rows, 'csv': str(path)})
    lines = [f"🌈 {len(rows)} hybrid modes (N={n_modes}) -> {path}"]
    lines += [f"  {r[0]:>4}  ω/2π={r[1]:+.6g} Hz  CC={r[2]:.4f}  γ̄/2π={r[3]:.6g} Hz" for r in rows]
    _emit(args, payload, lines)
    return payload


def cmd_timing(args) -> List[Dict[str, Any]]:
    preset = _preset(args)
    inputs = _inputs(args)
    if args.x_grid:
        grid = [float(x) for x in args.x_grid.split(',')]
    else:
        grid = [float(x) for x in preset.get('x_spl_grid') or np.round(np.linspace(0.8, 2.1, 14), 4)]

    manifest = _manifest(args, 'timing', {'fig': args.fig, 'inputs': dict(inputs)})
    rows, curves = [], []
    for label, doc in inputs:
        cfg = setup_from_dict(doc)
        curve = timing_sensitivity(cfg, _sim(doc, args), grid, space=space_from_dict(doc.get('search')),
                                   delta_tol=args.delta_tol, threads=args.threads)
        curves.append({'variant': label, 'best_x_spl': curve.best_x_spl, 'best_F': curve.best_F,
                       'half_width': curve.half_width, 'T': curve.T, 'omega_ratio': curve.omega_ratio})
        rows += [[label, x, f] for x, f in zip(curve.x_spl, curve.fidelity)]

    path = write_csv(_out_dir(args) / 'timing.csv', ['variant', 'x_spl', 'F'], rows)
    _finish(args, manifest, [path])
    lines = [f"⏱️ Timing sensitivity -> {path}"]
    lines += [f"  {c['variant'] or '-':<12} best F={c['best_F']:.5f} at x_spl={c['best_x_spl']:.3g}, "
              f"half width {c['half_width']:.3g}" for c in curves]
    _emit(args, {'curves': curves, 'csv': str(path)}, lines)
    return curves


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='JSON setup document')
    common.add_argument('--out', help=f'output directory (default {config.OUT_DIR})')
    common.add_argument('--json', action='store_true', help='print results as JSON')
    common.add_argument('--threads', type=int, default=None, help=f'parallel worker processes (default {config.THREADS})')
    common.add_argument('--fig', help='figure preset: ' + ', '.join(['3', '4a', '4b', '5', '6a', '6b', '6c', '6d', '7', '9']))
    common.add_argument('--log-level', default=None, help='override FIBERLINK_LOG_LEVEL')

    parser = argparse.ArgumentParser(prog='fiberlink', description='Quantum state transfer between fiber-coupled cavities')
    parser.add_argument('--version', action='version', version=f'%(prog)s {config.VERSION}')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('analyze', parents=[common], help='derived rates and analytic bounds')
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser('table', parents=[common], help='recompute Table I')
    p.set_defaults(handler=cmd_table)

    p = sub.add_parser('simulate', parents=[common], help='integrate one transfer')
    p.add_argument('--protocol', choices=['ap', 'wps', 'sincos'])
    p.add_argument('--n', type=int, help='fiber modes -N..N')
    p.add_argument('--basis', choices=['full', 'hybrid'], default='full')
    p.add_argument('--converge', action='store_true', help='double N until F settles')
    p.add_argument('--delta-tol', type=float, default=1e-4)
    p.add_argument('--full-modes', action='store_true', help='dump every fiber mode to the series CSV')
    p.set_defaults(handler=cmd_simulate)

    for name, handler, helptext in (('optimize', cmd_optimize, 'optimize drive parameters'),
                                    ('sweep-length', cmd_sweep, 'optimized F against fiber length')):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument('--protocol', choices=['ap', 'wps'])
        p.add_argument('--n', type=int, help='starting fiber modes -N..N')
        p.add_argument('--delta-tol', type=float, default=1e-4)
        if name == 'sweep-length':
            p.add_argument('--lengths', help='comma-separated fiber lengths in meters')
        p.set_defaults(handler=handler)

    p = sub.add_parser('lmax', parents=[common], help='maximal fiber length where AP beats P1')
    p.add_argument('--pout', type=float, help='single out-coupling probability')
    p.add_argument('--attenuation', type=float, default=0.2, help='dB/km when no config is given')
    p.add_argument('--margin', type=float, default=0.05)
    p.set_defaults(handler=cmd_lmax)

    p = sub.add_parser('modes', parents=[common], help='hybrid eigenmodes of the field sector')
    p.add_argument('--n', type=int, default=1, help='fiber modes -N..N')
    p.set_defaults(handler=cmd_modes)

    p = sub.add_parser('timing', parents=[common], help='F against pulse separation')
    p.add_argument('--x-grid', help='comma-separated x_spl values')
    p.add_argument('--n', type=int, help='starting fiber modes -N..N')
    p.add_argument('--delta-tol', type=float, default=1e-4)
    p.set_defaults(handler=cmd_timing)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config.setup_logging(args.log_level)
    try:
        args.handler(args)
    except FiberLinkError as e:
        logger.error(f"❌ {args.command} failed: {e}")
        print(f"❌ {e}", file=sys.stderr)
        return e.exit_code
    return 0


if __name__ == '__main__':
    sys.exit(main())
