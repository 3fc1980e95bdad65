import math

from flask import Blueprint, request, jsonify

from app.errors import RdnaError
from app.planner import PLAN_N_TAP, ReliabilityTarget, plan_redundancy, reliability_surface
from app.spectrum import ChannelProcess, availability
from app.topology import select_backup_taps
from config import Config

api_bp = Blueprint('api', __name__, url_prefix='/api')


def _float_arg(name, default=None):
    value = request.args.get(name)
    if value is None or value == '':
        if default is None:
            raise ValueError(f"{name} is required")
        return default
    return float(value)


def _int_field(data, name, default=None):
    value = data.get(name)
    if value is None:
        return default
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    try:
        number = float(value)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {value!r}") from None
    if not number.is_integer():
        raise ValueError(f"{name} must be an integer, got {value!r}")
    return int(number)


def _error(message, status=400):
    return jsonify({'success': False, 'message': message}), status


@api_bp.errorhandler(ValueError)
@api_bp.errorhandler(RdnaError)
def handle_bad_request(error):
    return _error(str(error))


# ============================================================================
# PLANNER ENDPOINTS
# ============================================================================

@api_bp.route('/plan', methods=['GET'])
def get_plan():
    """Switching interval, channel count and TAP set for a reliability target"""
    lambda_p = _float_arg('lambda_p')
    mu_s = _float_arg('mu_s')
    if lambda_p < 0 or mu_s <= 0:
        return _error('lambda_p must be >= 0 and mu_s > 0')
    target = ReliabilityTarget(xi_min=_float_arg('xi_min'), tau_max=_float_arg('tau_max', math.inf))
    n_tap = _int_field(request.args, 'n_tap', PLAN_N_TAP)
    plan = plan_redundancy(lambda_p, mu_s, target, n_tap=n_tap, w_max=Config.SURFACE_W_MAX)
    return jsonify({
        'success': True,
        'plan': plan.to_dict()
    })


@api_bp.route('/surface', methods=['POST'])
def get_surface():
    """Minimal channel count for a grid of ratios, TAP counts and targets"""
    data = request.get_json(silent=True) or {}

    ratios = data.get('ratios')
    n_a = data.get('n_a')
    xi_grid = data.get('xi_grid')
    if not ratios or not n_a or not xi_grid:
        return _error('ratios, n_a and xi_grid are required')

    cells = reliability_surface(
        [float(r) for r in ratios],
        [int(n) for n in n_a],
        [float(x) for x in xi_grid],
        smart=bool(data.get('smart', False)),
        monitored_channels=_int_field(data, 'monitored_channels'),
        w_max=_int_field(data, 'w_max', Config.SURFACE_W_MAX),
    )
    return jsonify({
        'success': True,
        'cells': [{'ratio': c.ratio, 'n_a': c.n_a, 'xi_min': c.xi_min, 'xi': c.xi, 'w': c.w} for c in cells],
        'count': len(cells)
    })


@api_bp.route('/backup-taps', methods=['POST'])
def get_backup_taps():
    """Smallest TAP set reaching xi_min"""
    data = request.get_json(silent=True) or {}

    candidates = data.get('candidates')
    if not candidates:
        return _error('candidates required')
    if 'xi_min' not in data:
        return _error('xi_min required')

    pairs = [(int(c['tap']), float(c['reliability'])) for c in candidates]
    selection = select_backup_taps(data.get('object_id', 'api'), pairs, float(data['xi_min']))
    return jsonify({
        'success': True,
        'taps': list(selection.taps),
        'n_a': selection.n_a,
        'reliability': selection.reliability,
        'feasible': selection.feasible
    })


@api_bp.route('/availability', methods=['GET'])
def get_availability():
    """Steady-state availability of one link on one channel"""
    scale = _float_arg('scale', 1.0)
    channel = ChannelProcess(
        channel_id=0,
        lambda_p=_float_arg('lambda_p'),
        mu_p=_float_arg('mu_p'),
        per_link_scale={(0, 0): scale},
    )
    return jsonify({
        'success': True,
        'availability': availability((0, 0), channel)
    })


@api_bp.route('/health', methods=['GET'])
def health():
    return jsonify({'success': True, 'status': 'ok'})
