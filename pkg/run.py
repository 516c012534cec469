#!/usr/bin/env python3
"""
PulseBench - Startup Script
Run this to start the HTTP service
"""

import uvicorn

from pulsebench.config import configure_logging, get_settings

if __name__ == "__main__":
    configure_logging()
    port = get_settings().port

    print(f"Starting PulseBench at http://localhost:{port}")
    print(f"API documentation: http://localhost:{port}/docs")
    print("Press Ctrl+C to stop the server")
    print()

    uvicorn.run(
        "pulsebench.main:app",
        host="0.0.0.0",
        port=port,
        reload=True,
        log_level="info"
    )
