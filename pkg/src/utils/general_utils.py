# coding=utf-8

import os


def create_path_if_not_existing(path):
    # type: (str) -> bool

    """
    Creates the parent directory of the given path. Paths ending with a
    separator are treated as directories.

    # Arguments
        :param path: file or directory path
    # Returns
        :return: True if a directory was created, False otherwise
    """
    if not path:
        return False

    dirname = os.path.dirname(path)

    if dirname and not os.path.exists(dirname):
        os.makedirs(dirname)
        return True
    else:
        return False


def write_data_frame(data_frame, file_path, float_format):
    # type: (pandas.DataFrame, str, str) -> str
    create_path_if_not_existing(file_path)
    data_frame.to_csv(file_path, index=False, float_format=float_format, lineterminator='\n')
    return file_path
