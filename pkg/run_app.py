#!/usr/bin/env python3
"""
Simple script to run the Painleve Geometry Engine API
"""

import os
import sys

# Add the current directory to Python path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

# Import and run the Flask app
if __name__ == '__main__':
    from app import app
    port = int(os.getenv('PORT', 5000))
    print("🚀 Starting Painleve Geometry Engine...")
    print(f"📊 Catalog available at: http://localhost:{port}/api/systems")
    print(f"🔍 Analyze a system at: http://localhost:{port}/api/analyze/P2.H1")
    print(f"📈 Identify systems at: http://localhost:{port}/api/identify?first=P2.H1&second=P2.H3")
    print("\n✨ Press Ctrl+C to stop the server\n")

    app.run(debug=True, host='0.0.0.0', port=port)
