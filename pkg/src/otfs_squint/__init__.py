"""OTFS Doppler-squint simulation and channel-estimation toolkit."""
