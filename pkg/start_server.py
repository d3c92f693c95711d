#!/usr/bin/env python3
"""
Start the Painleve Geometry Engine API server
"""

import os
import sys

# Set environment variables
os.environ.setdefault('FLASK_DEBUG', 'True')
os.environ.setdefault('LOG_LEVEL', 'INFO')

# Import Flask app
from app import app

if __name__ == '__main__':
    port = int(os.getenv('PORT', 5000))
    print("🚀 Starting Painleve Geometry Engine...")
    print(f"📊 Access the API at: http://localhost:{port}/api/systems")
    print("✨ Press Ctrl+C to stop\n")

    try:
        app.run(debug=True, host='127.0.0.1', port=port, use_reloader=False)
    except KeyboardInterrupt:
        print("\n👋 Server stopped!")
    except Exception as e:
        print(f"❌ Error starting server: {e}")
        sys.exit(1)
