const link = function (request, response) {
  var target = request.target;
  target = encodeURIComponent(target);
  var anchor = "<a href='" + target + "'>go</a>";
  response.write(anchor);
};
