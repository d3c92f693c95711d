"""
Painleve Geometry Engine Web API
Flask application exposing cascades, identifications and series analysis as JSON
"""

from flask import Flask, request, jsonify
from flask_cors import CORS
import os
from dotenv import load_dotenv
import logging

# Import our engine modules
from src.cascade import DEFAULT_MAX_DEPTH, combine_conditions, run_cascades
from src.errors import EngineError
from src.ham import CATALOG, get_system, list_systems, system_from_document
from src.identify import identify_systems
from src.lattice import diagram_from_cascade, minimalize
from src.report import ReportWriter
from src.series import (accessibility_flags, build_aux_function, expand_series, known_aux_function,
                        leading_orders)

# Load environment variables
load_dotenv()

# Initialize Flask app
app = Flask(__name__)
CORS(app)

# Configure logging
logging.basicConfig(level=os.getenv('LOG_LEVEL', 'INFO').upper())
logger = logging.getLogger(__name__)

report_writer = ReportWriter()


def _max_depth() -> int:
    return int(request.args.get('max_depth', os.getenv('MAX_DEPTH', DEFAULT_MAX_DEPTH)))


def _normalized() -> bool:
    return request.args.get('normalized', 'false').lower() == 'true'


@app.route('/api/systems')
def systems():
    """Catalog of built-in Hamiltonian systems"""
    return jsonify({name: {'H': CATALOG[name]['H'],
                           'category': CATALOG[name]['category'],
                           'description': CATALOG[name]['description']}
                    for name in list_systems()})


@app.route('/api/analyze/<name>')
def analyze(name):
    """Cascade report with conditions and intersection diagrams"""
    try:
        system = get_system(name, normalized=_normalized())
        tree = run_cascades(system, _max_depth())
        flags, aux, source = accessibility_flags(system, tree)
        diagram = diagram_from_cascade(tree, accessibility=flags)
        minimal, _ = minimalize(diagram)
        report = report_writer.cascade_report(tree, diagram, minimal)
        report['combined_conditions'] = [c.text(system.ctx)
                                         for c in combine_conditions(tree.conditions, system.ctx)]
        report['accessibility'] = flags
        report['accessibility_source'] = source
        if aux is not None:
            report['W'] = aux.text()
        return jsonify(report)
    except EngineError as e:
        logger.error(f"Analysis error: {str(e)}")
        return jsonify({'error': str(e)}), 400
    except Exception as e:
        logger.error(f"Error analyzing {name}: {str(e)}")
        return jsonify({'error': str(e)}), 500


@app.route('/api/analyze', methods=['POST'])
def analyze_document():
    """Cascade report for an inline system document"""
    try:
        system = system_from_document(request.get_json(force=True) or {})
        tree = run_cascades(system, _max_depth())
        return jsonify(report_writer.cascade_report(tree))
    except EngineError as e:
        logger.error(f"Analysis error: {str(e)}")
        return jsonify({'error': str(e)}), 400
    except Exception as e:
        logger.error(f"Error analyzing document: {str(e)}")
        return jsonify({'error': str(e)}), 500


@app.route('/api/identify')
def identify():
    """Symplectic maps between two catalog systems"""
    first = request.args.get('first', '')
    second = request.args.get('second', '')
    try:
        result = identify_systems(get_system(first, normalized=_normalized()),
                                  get_system(second, normalized=_normalized()), _max_depth())
        return jsonify(report_writer.identification_report(result))
    except EngineError as e:
        logger.error(f"Identification error: {str(e)}")
        return jsonify({'error': str(e)}), 400
    except Exception as e:
        logger.error(f"Error identifying {first} and {second}: {str(e)}")
        return jsonify({'error': str(e)}), 500


@app.route('/api/series/<name>')
def series(name):
    """Puiseux expansions, resonance conditions and the auxiliary function"""
    try:
        system = get_system(name, normalized=_normalized())
        order = int(request.args.get('order', 6))
        expansions = [expand_series(system, b, order) for b in leading_orders(system)]
        try:
            aux = build_aux_function(system, expansions, order)
        except EngineError as e:
            logger.warning(f"No auxiliary function for {name}: {str(e)}")
            aux = None
        return jsonify(report_writer.series_report(system, expansions, aux,
                                                   known=known_aux_function(system)))
    except EngineError as e:
        logger.error(f"Series error: {str(e)}")
        return jsonify({'error': str(e)}), 400
    except Exception as e:
        logger.error(f"Error expanding {name}: {str(e)}")
        return jsonify({'error': str(e)}), 500


@app.route('/api/health')
def health():
    return jsonify({'status': 'ok', 'systems': len(CATALOG)})


if __name__ == '__main__':
    # Create necessary directories
    os.makedirs(os.getenv('OUTPUT_DIR', 'data/reports'), exist_ok=True)

    # Run the app
    debug_mode = os.getenv('FLASK_DEBUG', 'False').lower() == 'true'
    port = int(os.getenv('PORT', 5000))

    app.run(debug=debug_mode, host='0.0.0.0', port=port)
