"""
Arguments shared by the net_send, net_proxy and net_recv commands.
"""
from dataclasses import replace

from utils.lab_config import load_lab_config

PORT_OPTIONS = ('host', 'sender_port', 'proxy_listen_port', 'receiver_port', 'pacing', 'idle_timeout', 'attack')


def add_stream_arguments(parser):
    parser.add_argument('--config', help='Lab configuration file (defaults to LAB_CONFIG_FILE)')
    parser.add_argument('--host', help='Address every role binds to and sends to')
    parser.add_argument('--sender-port', type=int, dest='sender_port')
    parser.add_argument('--proxy-port', type=int, dest='proxy_listen_port', help='Port the proxy listens on')
    parser.add_argument('--receiver-port', type=int, dest='receiver_port', help='Port the receiver listens on')
    parser.add_argument('--idle-timeout', type=float, dest='idle_timeout',
                        help='Seconds without packets before a role stops')


def stream_setup(options):
    """
    Lab configuration plus the StreamConfig with command-line overrides applied.

    Returns:
        tuple: (LabConfig, StreamConfig)
    """
    lab = load_lab_config(options.get('config'))
    overrides = {name: options[name] for name in PORT_OPTIONS if options.get(name) is not None}
    return lab, replace(lab.net, **overrides)
