"""
Single-process stand-in for an mpi4py communicator.

The Monte Carlo harness distributes trial blocks with allgather, the one
collective defined here.  When mpi4py is not installed (or the run is not
launched under mpiexec) the same code runs through this communicator with
one rank.

Example
-------
    >>> from dplab import dummympi
    >>> comm = dummympi.get_communicator()
    >>> comm.allgather(3)
    [3]
"""


class DummyMPIComm(object):
    def __init__(self):
        """Create a dummy communicator holding a single rank."""
        self.size = 1
        self.rank = 0

    def allgather(self, sendobj=None):
        """Return the list of objects contributed by every rank, i.e. [sendobj]."""
        return [sendobj]


# Define a COMM_WORLD
COMM_WORLD = DummyMPIComm()


def get_communicator():
    """Return mpi4py's COMM_WORLD when available, else the dummy communicator."""
    try:
        from mpi4py import MPI
    except ImportError:
        return COMM_WORLD
    return MPI.COMM_WORLD


if __name__ == '__main__':
    import doctest
    doctest.testmod()
