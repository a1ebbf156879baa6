"""The main file of the toolkit which will install all requirements in
a virtual environment and then start the command line.
"""

import subprocess
import os
import sys

script_directory = os.path.dirname(os.path.realpath(__file__))
os.chdir(script_directory)

# Install uv
subprocess.run([sys.executable, "-m", "pip", "install", "uv"], check=True)

# Create virtual environment
subprocess.run(["uv", "venv"], check=True)

# Install packages in the virtual environment
subprocess.run(["uv", "pip", "install", "."], check=True)

if os.name == "nt":
    python = os.path.join(".venv", "Scripts", "python")
else:
    python = os.path.join(".venv", "bin", "python")

command_args = [python, "-m", "mutacp"] + sys.argv[1:]

sys.exit(subprocess.run(command_args, check=False).returncode)
